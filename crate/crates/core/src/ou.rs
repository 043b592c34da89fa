//! Explicit spectrum of the Ornstein–Uhlenbeck type operator
//! L = −Δ_A − a/|x|² + x·∇/2 and its eigenfunctions
//! V_{m,k}(x) = |x|^{−α_k} P_{k,m}(|x|²/4) ψ_k(x/|x|).

use alloc::sync::Arc;
use core::ops::Deref;
use alloc::vec::Vec;

use crate::angular::{AngularPotential, AngularSpectrum, ModeLabel};
use crate::field::{modal_inner, pointwise_inner, Profile, QuadOptions, RadialField, SolutionField, Weight};
use crate::special::{binomial, laguerre, laguerre_with_derivative, ln_gamma, ln_pochhammer};
use crate::{Error, Result, C64};

/// (α, β) = ((N−2)/2 − √(((N−2)/2)² + μ), √(((N−2)/2)² + μ)).
pub fn exponents(mu: f64, dim: usize) -> Result<(f64, f64)> {
    let h = (dim as f64 - 2.0) / 2.0;
    let rad = h * h + mu;
    if rad < 0.0 {
        return Err(Error::HardyViolated { margin: rad });
    }
    let beta = libm::sqrt(rad);
    Ok((h - beta, beta))
}

/// Coefficients of P_{k,m}(s) = Σ_i (−m)_i / (1+β)_i · s^i / i!.
pub fn radial_poly(m: usize, beta: f64) -> Vec<f64> {
    (0..=m)
        .map(|i| {
            let (ln_num, sign_num) = ln_pochhammer(-(m as f64), i);
            let (ln_den, sign_den) = ln_pochhammer(1.0 + beta, i);
            sign_num * sign_den * libm::exp(ln_num - ln_den - ln_gamma(i as f64 + 1.0))
        })
        .collect()
}

fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * s + x)
}

fn horner_derivative(c: &[f64], s: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &x)| acc * s + i as f64 * x)
}

/// max over s ∈ [0, 10] of |P(s) − L_m^β(s)/binom(m+β, m)|, relative to max(1, |P|).
pub fn laguerre_consistency(m: usize, beta: f64) -> f64 {
    let c = radial_poly(m, beta);
    let b = binomial(m as f64 + beta, m);
    (0..=200)
        .map(|i| {
            let s = i as f64 * 0.05;
            let p = horner(&c, s);
            (p - laguerre(m, beta, s) / b).abs() / p.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// ‖V_{m,k}‖²_𝓛 = 2^{1+2β} Γ(1+β) / binom(m+β, m).
pub fn norm_v_closed_form(m: usize, beta: f64) -> f64 {
    libm::exp(
        (1.0 + 2.0 * beta) * core::f64::consts::LN_2 + ln_gamma(1.0 + beta)
            - libm::log(binomial(m as f64 + beta, m)),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMode {
    pub m: usize,
    /// Angular index (1-based).
    pub k: usize,
    pub label: ModeLabel,
    pub dim: usize,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub radial_poly: Vec<f64>,
    /// ‖V_{m,k}‖²_𝓛.
    pub norm_sq: f64,
    inv_binom: f64,
}

impl SpectralMode {
    pub fn new(m: usize, k: usize, spectrum: &AngularSpectrum) -> Result<Self> {
        let pair = spectrum.pair(k)?;
        let dim = spectrum.dim();
        let (alpha, beta) = exponents(pair.mu, dim)?;
        let gamma = m as f64 - alpha / 2.0;
        Ok(SpectralMode {
            m,
            k,
            label: pair.label,
            dim,
            mu: pair.mu,
            alpha,
            beta,
            gamma,
            gamma_tilde: dim as f64 / 2.0 + gamma,
            radial_poly: radial_poly(m, beta),
            norm_sq: norm_v_closed_form(m, beta),
            inv_binom: 1.0 / binomial(m as f64 + beta, m),
        })
    }

    /// P_{k,m}(s) and dP/ds via the Laguerre recurrence.
    pub fn poly(&self, s: f64) -> (f64, f64) {
        let (l, dl) = laguerre_with_derivative(self.m, self.beta, s);
        (l * self.inv_binom, dl * self.inv_binom)
    }

    /// φ(r) = r^{−α} P(r²/4) and φ′(r).
    pub fn radial(&self, r: f64) -> (f64, f64) {
        let (p, dp) = self.poly(r * r / 4.0);
        let rp = if self.alpha == 0.0 { 1.0 } else { libm::pow(r, -self.alpha) };
        let d = rp * (-self.alpha / r * p + 0.5 * r * dp);
        (rp * p, d)
    }

    /// Radial factor of Ṽ = V/‖V‖.
    pub fn normalized_radial(&self, r: f64) -> (f64, f64) {
        let (v, d) = self.radial(r);
        let n = 1.0 / libm::sqrt(self.norm_sq);
        (v * n, d * n)
    }

    /// Residual of φ″ + ((N−1)/r − r/2)φ′ + (γ − μ/r²)φ computed from the
    /// coefficient list, relative to the largest term.
    pub fn eigen_residual(&self, r: f64) -> f64 {
        let c = &self.radial_poly;
        let s = r * r / 4.0;
        // φ = r^{−α} P(r²/4): derivatives through the product rule.
        let p = horner(c, s);
        let dp = horner_derivative(c, s);
        let d2c: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, &x)| i as f64 * x).collect();
        let d2p = horner_derivative(&d2c, s);
        let a = -self.alpha;
        let ra = libm::pow(r, a);
        let phi = ra * p;
        let dphi = a * ra / r * p + ra * 0.5 * r * dp;
        let d2phi = a * (a - 1.0) * ra / (r * r) * p + 2.0 * a * ra / r * 0.5 * r * dp + ra * (0.5 * dp + 0.25 * r * r * d2p);
        let n = self.dim as f64;
        let terms = [
            d2phi,
            (n - 1.0) / r * dphi,
            -r / 2.0 * dphi,
            self.gamma * phi,
            -self.mu / (r * r) * phi,
        ];
        let res: f64 = terms.iter().sum();
        let scale = terms.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        res.abs() / scale
    }
}

/// γ_{m,k} and everything derived from it.
pub fn gamma_eigenvalue(m: usize, k: usize, spectrum: &AngularSpectrum) -> Result<SpectralMode> {
    SpectralMode::new(m, k, spectrum)
}

/// V_{m,k}(x) = |x|^{−α} P(|x|²/4) ψ_k(x/|x|).
pub fn eval_v(mode: &SpectralMode, spectrum: &AngularSpectrum, x: &[f64]) -> Result<C64> {
    let r = libm::sqrt(x.iter().map(|v| v * v).sum());
    if r == 0.0 {
        if mode.alpha > 0.0 {
            return Err(Error::SingularAtOrigin { alpha: mode.alpha });
        }
        if mode.alpha < 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        // α = 0: only direction-independent ψ have a limit at the origin.
        let a = spectrum.psi(mode.k, &unit_axis(x.len()))?;
        let b = spectrum.psi(mode.k, &neg_unit_axis(x.len()))?;
        if (a - b).norm() > 1e-12 {
            return Err(Error::SingularAtOrigin { alpha: 0.0 });
        }
        return Ok(a);
    }
    let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
    Ok(spectrum.psi(mode.k, &unit)? * mode.radial(r).0)
}

fn unit_axis(n: usize) -> Vec<f64> {
    let mut v = alloc::vec![0.0; n];
    v[0] = 1.0;
    v
}

fn neg_unit_axis(n: usize) -> Vec<f64> {
    let mut v = alloc::vec![0.0; n];
    v[n - 1] = -1.0;
    v
}

/// All modes with m ≤ m_max over the whole angular spectrum, sorted by γ.
pub fn mode_table(spectrum: &AngularSpectrum, m_max: usize) -> Result<Vec<SpectralMode>> {
    let mut out = Vec::new();
    for k in 1..=spectrum.len() {
        for m in 0..=m_max {
            out.push(SpectralMode::new(m, k, spectrum)?);
        }
    }
    out.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.k.cmp(&b.k)).then(a.m.cmp(&b.m)));
    Ok(out)
}

/// Default γ-matching tolerance: analytic spectra are exact, Galerkin ones are not.
pub fn default_gamma_tolerance(spectrum: &AngularSpectrum) -> f64 {
    match spectrum.potential() {
        AngularPotential::Fourier { .. } => 1e-6,
        _ => 1e-9,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    pub gamma: f64,
    pub modes: Vec<SpectralMode>,
    /// The angular truncation may hide further modes with this γ.
    pub possibly_incomplete: bool,
}

/// All (m, k) with |γ_{m,k} − γ| ≤ tol, m ≤ m_max, k ≤ k_max.
pub fn eigenspace_basis(
    gamma: f64,
    spectrum: &AngularSpectrum,
    m_max: usize,
    k_max: usize,
    tol: f64,
) -> Result<Eigenspace> {
    let k_max = k_max.min(spectrum.len());
    let mut modes = Vec::new();
    for k in 1..=k_max {
        let (alpha, _) = exponents(spectrum.mu(k), spectrum.dim())?;
        let m = libm::round(gamma + alpha / 2.0);
        if m < 0.0 || m > m_max as f64 {
            continue;
        }
        let m = m as usize;
        if (m as f64 - alpha / 2.0 - gamma).abs() <= tol {
            modes.push(SpectralMode::new(m, k, spectrum)?);
        }
    }
    if modes.is_empty() {
        return Err(Error::EmptyEigenspace { gamma, tolerance: tol });
    }
    let (_, beta_last) = exponents(spectrum.mu(k_max), spectrum.dim())?;
    Ok(Eigenspace {
        gamma,
        modes,
        possibly_incomplete: beta_last < 2.0 * gamma + spectrum.dim() as f64 - 2.0,
    })
}

/// Σ c_{m,k} Ṽ_{m,k} (or Ũ = e^{−|x|²/4}Ṽ when `tilde` is set).
#[derive(Debug, Clone)]
pub struct ModeSum<S = Arc<AngularSpectrum>> {
    spectrum: S,
    terms: Vec<(SpectralMode, C64)>,
    tilde: bool,
}

impl<S: Deref<Target = AngularSpectrum>> ModeSum<S> {
    pub fn new(spectrum: S, terms: Vec<(SpectralMode, C64)>) -> Self {
        ModeSum {
            spectrum,
            terms,
            tilde: false,
        }
    }

    pub fn single(spectrum: S, mode: SpectralMode) -> Self {
        Self::new(spectrum, alloc::vec![(mode, C64::new(1.0, 0.0))])
    }

    /// Switch to the Ũ = e^{−|x|²/4}Ṽ basis.
    pub fn tilde(mut self) -> Self {
        self.tilde = true;
        self
    }

    pub fn terms(&self) -> &[(SpectralMode, C64)] {
        &self.terms
    }

    pub fn spectrum_handle(&self) -> &S {
        &self.spectrum
    }
}

fn mode_profile(terms: &[(SpectralMode, C64)], k: usize, r: f64) -> Profile {
    let mut p = Profile::default();
    for (mode, c) in terms.iter().filter(|t| t.0.k == k) {
        let (v, d) = mode.normalized_radial(r);
        p.value += c * v;
        p.deriv += c * d;
    }
    p
}

fn mode_components(terms: &[(SpectralMode, C64)]) -> Vec<usize> {
    let mut ks: Vec<usize> = terms.iter().map(|t| t.0.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn mode_power(terms: &[(SpectralMode, C64)], k: usize) -> f64 {
    terms
        .iter()
        .filter(|t| t.0.k == k)
        .map(|t| -t.0.alpha)
        .fold(f64::INFINITY, f64::min)
}

impl<S: Deref<Target = AngularSpectrum>> RadialField for ModeSum<S> {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.spectrum
    }
    fn components(&self) -> Vec<usize> {
        mode_components(&self.terms)
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        let p = mode_profile(&self.terms, k, r);
        if !self.tilde {
            return p;
        }
        let e = libm::exp(-r * r / 4.0);
        Profile::new(p.value * e, (p.deriv - p.value * (r / 2.0)) * e)
    }
    fn leading_power(&self, k: usize) -> f64 {
        mode_power(&self.terms, k)
    }
    fn gaussian_rate(&self) -> f64 {
        if self.tilde {
            0.25
        } else {
            0.0
        }
    }
}

/// ũ(x, t) = e^{−c t} Σ c_{m,k} t^{γ_{m,k}} Ṽ_{m,k}(x/√t), in the backward
/// time variable. With c = 0 this solves the unperturbed equation; with c = c₀
/// it solves the equation with constant h = c₀.
#[derive(Debug, Clone)]
pub struct SelfSimilarField<S = Arc<AngularSpectrum>> {
    spectrum: S,
    terms: Vec<(SpectralMode, C64)>,
    damping: f64,
}

impl<S: Deref<Target = AngularSpectrum>> SelfSimilarField<S> {
    pub fn new(spectrum: S, terms: Vec<(SpectralMode, C64)>) -> Self {
        SelfSimilarField {
            spectrum,
            terms,
            damping: 0.0,
        }
    }

    pub fn eigenfield(spectrum: S, mode: SpectralMode) -> Self {
        Self::new(spectrum, alloc::vec![(mode, C64::new(1.0, 0.0))])
    }

    pub fn with_damping(mut self, c0: f64) -> Self {
        self.damping = c0;
        self
    }

    pub fn terms(&self) -> &[(SpectralMode, C64)] {
        &self.terms
    }
}

impl<S: Deref<Target = AngularSpectrum>> SolutionField for SelfSimilarField<S> {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.spectrum
    }
    fn components(&self) -> Vec<usize> {
        mode_components(&self.terms)
    }
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
        let sq = libm::sqrt(t);
        let damp = libm::exp(-self.damping * t);
        let mut p = Profile::default();
        for (mode, c) in self.terms.iter().filter(|x| x.0.k == k) {
            let (v, d) = mode.normalized_radial(r / sq);
            let f = c * damp * libm::pow(t, mode.gamma);
            p.value += f * v;
            p.deriv += f * d / sq;
        }
        p
    }
    fn leading_power(&self, k: usize) -> f64 {
        mode_power(&self.terms, k)
    }
}

/// ∫ f ḡ G(x, t) dx. For N = 2 by radial Gauss–Laguerre × angular trapezoid;
/// otherwise by angular orthonormality. The result is recomputed at doubled
/// order and rejected if the two disagree by more than 1e−7.
pub fn inner_product_l<F, G>(f: &F, g: &G, t: f64, opts: &QuadOptions) -> Result<C64>
where
    F: RadialField + ?Sized,
    G: RadialField + ?Sized,
{
    let dim = f.spectrum().dim();
    let w = Weight::gaussian(dim, t);
    let eval = |o: &QuadOptions| {
        if dim == 2 {
            pointwise_inner(f, g, w, o)
        } else {
            modal_inner(f, g, w, o)
        }
    };
    let a = eval(opts)?;
    let b = eval(&opts.doubled())?;
    let d = (a - b).norm();
    if d > 1e-7 * b.norm().max(1.0) {
        return Err(Error::QuadratureNotConverged {
            what: "inner product",
            discrepancy: d,
        });
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::AngularPotential;
    use core::f64::consts::PI;

    fn ab(phi: f64, k: usize) -> Arc<AngularSpectrum> {
        Arc::new(AngularSpectrum::new(AngularPotential::AharonovBohm { circulation: phi }, k, None).unwrap())
    }

    fn free3(l: usize) -> Arc<AngularSpectrum> {
        Arc::new(AngularSpectrum::new(AngularPotential::SphereConstant { dim: 3, a: 0.0 }, l, None).unwrap())
    }

    #[test]
    fn exponent_examples() {
        let (a, b) = exponents(0.09, 2).unwrap();
        assert!((a + 0.3).abs() < 1e-15 && (b - 0.3).abs() < 1e-15);
        assert_eq!(exponents(0.0, 3).unwrap(), (0.0, 0.5));
        assert_eq!(exponents(2.0, 3).unwrap(), (-1.0, 1.5));
        assert!(matches!(exponents(-1.0, 2), Err(Error::HardyViolated { .. })));
    }

    #[test]
    fn gamma_examples() {
        let s = ab(0.3, 2);
        let m = gamma_eigenvalue(0, s.find(ModeLabel::Wavenumber(0)).unwrap(), &s).unwrap();
        assert!((m.gamma - 0.15).abs() < 1e-15);
        assert!((m.gamma_tilde - m.gamma - 1.0).abs() < 1e-15);
        let s = ab(0.5, 2);
        let m = gamma_eigenvalue(1, s.find(ModeLabel::Wavenumber(1)).unwrap(), &s).unwrap();
        assert!((m.gamma - 1.25).abs() < 1e-15);
        let f = free3(1);
        assert_eq!(gamma_eigenvalue(2, 1, &f).unwrap().gamma, 2.0);
        assert!(gamma_eigenvalue(0, 99, &f).is_err());
    }

    #[test]
    fn radial_poly_examples() {
        assert_eq!(radial_poly(0, 0.7), [1.0]);
        let p = radial_poly(1, 0.3);
        assert!((p[1] + 1.0 / 1.3).abs() < 1e-15);
        let p = radial_poly(2, 0.5);
        let e = [1.0, -4.0 / 3.0, 4.0 / 15.0];
        for (x, y) in p.iter().zip(e) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn laguerre_consistency_examples() {
        assert!(laguerre_consistency(1, 0.3) <= 1e-14);
        assert_eq!(laguerre_consistency(0, 2.2), 0.0);
        assert!(laguerre_consistency(5, 1.5) <= 1e-12);
    }

    #[test]
    fn norm_examples() {
        assert!((norm_v_closed_form(0, 0.3) - 2.720_6).abs() < 1e-4);
        assert!((norm_v_closed_form(0, 0.5) - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!((norm_v_closed_form(1, 0.5) - 4.0 * PI.sqrt() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn eval_v_examples() {
        let f = free3(1);
        let m = SpectralMode::new(0, 1, &f).unwrap();
        let v = eval_v(&m, &f, &[0.3, -1.0, 2.0]).unwrap();
        assert!((v.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((eval_v(&m, &f, &[0.0, 0.0, 0.0]).unwrap().re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let s = ab(0.3, 2);
        let m = SpectralMode::new(0, 1, &s).unwrap();
        let v = eval_v(&m, &s, &[0.0, 2.0]).unwrap();
        assert!((v.re - libm::pow(2.0, 0.3) / (2.0 * PI).sqrt()).abs() < 1e-15);
        let m = SpectralMode::new(1, 1, &f).unwrap();
        assert!(eval_v(&m, &f, &[6f64.sqrt(), 0.0, 0.0]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn eigenspace_examples() {
        let s = ab(0.5, 3);
        let e = eigenspace_basis(0.25, &s, 4, s.len(), 1e-9).unwrap();
        let labels: Vec<_> = e.modes.iter().map(|m| (m.m, m.label)).collect();
        assert_eq!(labels, [(0, ModeLabel::Wavenumber(0)), (0, ModeLabel::Wavenumber(1))]);
        // Degrees ≤ 1 (k ≤ 4): only the radial m = 1 mode has γ = 1.
        let f = free3(1);
        let e = eigenspace_basis(1.0, &f, 4, 4, 1e-9).unwrap();
        assert_eq!(e.modes.len(), 1);
        assert_eq!((e.modes[0].m, e.modes[0].k), (1, 1));
        assert!(e.possibly_incomplete);
        // With degree 2 available the five (0, l=2) modes join it.
        let f = free3(2);
        let e = eigenspace_basis(1.0, &f, 4, f.len(), 1e-9).unwrap();
        assert_eq!(e.modes.len(), 6);
        assert!(matches!(eigenspace_basis(-1.0, &f, 4, f.len(), 1e-9), Err(Error::EmptyEigenspace { .. })));
    }

    #[test]
    fn eigen_residual_small() {
        let s = ab(0.3, 3);
        for k in 1..=s.len() {
            for m in 0..6 {
                let mode = SpectralMode::new(m, k, &s).unwrap();
                for i in 0..50 {
                    let r = 0.1 + i as f64 * 0.2;
                    assert!(mode.eigen_residual(r) < 1e-9, "m={m} k={k} r={r}");
                }
            }
        }
    }

    #[test]
    fn orthonormality_examples() {
        let s = ab(0.3, 2);
        let opts = QuadOptions::default();
        let v = |m, k| ModeSum::single(s.clone(), SpectralMode::new(m, k, &s).unwrap());
        let a = inner_product_l(&v(0, 1), &v(0, 1), 1.0, &opts).unwrap();
        assert!((a.re - 1.0).abs() < 1e-10 && a.im.abs() < 1e-10);
        assert!(inner_product_l(&v(0, 1), &v(1, 1), 1.0, &opts).unwrap().norm() < 1e-10);
        assert!(inner_product_l(&v(2, 1), &v(2, 3), 1.0, &opts).unwrap().norm() < 1e-12);
    }

    #[test]
    fn modes_have_the_closed_form_norm_under_quadrature() {
        let s = ab(0.3, 2);
        let opts = QuadOptions { radial_order: 40, angular_points: 16 };
        for m in 0..=6 {
            let mode = SpectralMode::new(m, 3, &s).unwrap();
            let f = ModeSum::single(s.clone(), mode.clone());
            let n = modal_inner(&f, &f, Weight::gaussian(2, 1.0), &opts).unwrap().re;
            assert!((n - 1.0).abs() < 1e-12);
            let u = ModeSum::single(s.clone(), mode).tilde();
            let nu = modal_inner(&u, &u, Weight::inverse_gaussian(), &opts).unwrap().re;
            assert!((nu - 1.0).abs() < 1e-12);
        }
    }
}
