//! Gauss rules: Legendre on [−1, 1], generalised Laguerre on [0, ∞) with weight
//! s^a e^{−s}, and the radial rule used for Gaussian-weighted integrals.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::special::ln_gamma;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Affine map of a rule on [−1, 1] onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> GaussRule {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        GaussRule {
            nodes: self.nodes.iter().map(|&x| c + h * x).collect(),
            weights: self.weights.iter().map(|&w| h * w).collect(),
        }
    }
}

/// Gauss–Legendre rule on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> GaussRule {
    assert!(n > 0, "empty Gauss rule");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_legendre(a: f64, b: f64, panels: usize, order: usize) -> GaussRule {
    let base = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let r = base.mapped(a + p as f64 * h, a + (p + 1) as f64 * h);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    GaussRule { nodes, weights }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts. `off[i]` couples rows i and i+1.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Eigensolver("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Generalised Gauss–Laguerre rule for ∫₀^∞ f(s) s^a e^{−s} ds, a > −1.
///
/// Nodes come from the Jacobi matrix, are polished by Newton steps on the
/// orthonormal recurrence, and the weights are reciprocal Christoffel sums
/// (kept in log form to survive large nodes).
pub fn gauss_laguerre(n: usize, a: f64) -> Result<GaussRule> {
    if n == 0 {
        return Err(Error::invalid("order", "Gauss rule needs at least one node"));
    }
    if !(a > -1.0) {
        return Err(Error::invalid("a", alloc::format!("Laguerre exponent {a} must exceed -1")));
    }
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + a + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| libm::sqrt(k as f64 * (k as f64 + a))).collect();
    let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
    let ln_mass = ln_gamma(a + 1.0);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_laguerre(n, a, *x, ln_mass);
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *x -= step;
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
        let (_, _, ln_christoffel) = orthonormal_laguerre(n, a, *x, ln_mass);
        weights.push(libm::exp(-ln_christoffel));
    }
    Ok(GaussRule { nodes, weights })
}

/// Returns (p̃_n, p̃_n′) up to a common positive factor, and ln Σ_{k<n} p̃_k².
fn orthonormal_laguerre(n: usize, a: f64, x: f64, ln_mass: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = libm::exp(-0.5 * ln_mass);
    let mut d_prev = 0.0;
    let mut d = 0.0;
    let mut sum = 0.0;
    let mut ln_scale = 0.0;
    for k in 0..n {
        sum += p * p;
        let kf = k as f64;
        let alpha = 2.0 * kf + a + 1.0;
        let sb = libm::sqrt(kf * (kf + a));
        let sb1 = libm::sqrt((kf + 1.0) * (kf + 1.0 + a));
        let p_next = ((x - alpha) * p - sb * p_prev) / sb1;
        let d_next = ((x - alpha) * d + p - sb * d_prev) / sb1;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        let mag = p.abs().max(p_prev.abs());
        if mag > 1e100 {
            let f = 1e-100;
            p *= f;
            p_prev *= f;
            d *= f;
            d_prev *= f;
            sum *= f * f;
            ln_scale += 100.0 * core::f64::consts::LN_10;
        }
    }
    (p, d, libm::log(sum) + 2.0 * ln_scale)
}

/// Rule for ∫₀^∞ f(r) r^{N−1} e^{−r²/4} dr built on s = r²/4.
///
/// With Laguerre exponent `a` the rule is exact when s^{N/2−1−a} f(2√s) is a
/// polynomial of degree < 2·order; the non-polynomial power is folded into the
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialQuadrature {
    pub dim: usize,
    pub order: usize,
    pub exponent: f64,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialQuadrature {
    /// Rule exact on even polynomials in r.
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        Self::with_exponent(dim, order, dim as f64 / 2.0 - 1.0)
    }

    pub fn with_exponent(dim: usize, order: usize, exponent: f64) -> Result<Self> {
        let rule = gauss_laguerre(order, exponent)?;
        let h = dim as f64 / 2.0 - 1.0;
        let pref = libm::pow(2.0, dim as f64 - 1.0);
        let mut r = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            r.push(2.0 * libm::sqrt(s));
            weights.push(pref * w * libm::pow(s, h - exponent));
        }
        Ok(RadialQuadrature {
            dim,
            order,
            exponent,
            s: rule.nodes,
            r,
            weights,
        })
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.r.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 16, 33] {
            let g = gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let v = g.integrate(|x| libm::pow(x, k as f64));
                assert!((v - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn tridiagonal_matches_known_spectrum() {
        // Discrete Dirichlet Laplacian: 2 − 2cos(jπ/(n+1)).
        let n = 12;
        let ev = tridiagonal_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (j, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * libm::cos((j + 1) as f64 * PI / (n + 1) as f64);
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn laguerre_moments_exact() {
        for &a in &[-0.9, -0.5, 0.0, 0.3, 1.5, 4.0] {
            for n in [1usize, 4, 20, 60, 120] {
                let g = gauss_laguerre(n, a).unwrap();
                for j in 0..(2 * n) {
                    if ln_gamma(a + 1.0 + j as f64) > 250.0 {
                        break;
                    }
                    let exact = libm::exp(ln_gamma(a + 1.0 + j as f64));
                    let v = g.integrate(|s| libm::pow(s, j as f64));
                    assert!((v - exact).abs() <= 1e-12 * exact, "a={a} n={n} j={j} {v} {exact}");
                }
            }
        }
    }

    #[test]
    fn radial_rule_exact_on_even_moments() {
        for dim in 2..=4usize {
            let order = 24;
            let q = RadialQuadrature::new(dim, order).unwrap();
            for j in 0..(2 * order) {
                let exact = libm::exp(
                    j as f64 * libm::log(4.0) + (dim as f64 - 1.0) * libm::log(2.0)
                        + ln_gamma(j as f64 + dim as f64 / 2.0),
                );
                let v = q.integrate(|r| libm::pow(r, 2.0 * j as f64));
                assert!((v - exact).abs() <= 1e-12 * exact, "dim={dim} j={j}");
            }
        }
    }
}
