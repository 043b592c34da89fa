//! Fields expanded on the angular eigenbasis, u(x) = Σ_k f_k(|x|) ψ_k(x/|x|),
//! and the Gaussian-weighted integrals computed on them.
//!
//! Radial integrals use s = r²/(4t) and a generalised Gauss–Laguerre rule whose
//! exponent matches the leading power of the integrand at the origin, so that
//! the remaining factor is smooth (a polynomial for eigenfunctions).

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::angular::AngularSpectrum;
use crate::problem::StaticPerturbation;
use crate::quadrature::{gauss_laguerre, gauss_legendre, GaussRule};
use crate::{Error, Result, C64};

/// Value of a radial profile and its r-derivative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Profile {
    pub value: C64,
    pub deriv: C64,
}

impl Profile {
    pub fn new(value: C64, deriv: C64) -> Self {
        Profile { value, deriv }
    }

    pub fn scale(self, c: C64) -> Self {
        Profile {
            value: self.value * c,
            deriv: self.deriv * c,
        }
    }
}

impl core::ops::Add for Profile {
    type Output = Profile;
    fn add(self, o: Profile) -> Profile {
        Profile {
            value: self.value + o.value,
            deriv: self.deriv + o.deriv,
        }
    }
}

/// A time-independent field in modal form.
pub trait RadialField {
    fn spectrum(&self) -> &AngularSpectrum;
    /// Angular indices (1-based) that may carry a nonzero profile.
    fn components(&self) -> Vec<usize>;
    fn profile(&self, k: usize, r: f64) -> Profile;
    /// Exponent p with f_k(r) = O(r^p) at the origin, f_k(r)/r^p smooth.
    fn leading_power(&self, k: usize) -> f64;
    /// Rate q ≥ 0 with |f_k(r)| = O(e^{−q r²}) (a lower bound is fine).
    fn gaussian_rate(&self) -> f64 {
        0.0
    }
}

/// A time-dependent field in modal form. The meaning of t is set by the
/// implementor: forward time for evolutions of initial data, backward time
/// (time to the observation point) for frequency diagnostics.
pub trait SolutionField {
    fn spectrum(&self) -> &AngularSpectrum;
    fn components(&self) -> Vec<usize>;
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile;
    fn leading_power(&self, k: usize) -> f64;
    fn gaussian_rate(&self, _t: f64) -> f64 {
        0.0
    }
}

/// Data given pointwise, such as initial conditions.
pub trait PointField {
    fn value(&self, x: &[f64]) -> C64;
}

impl<F: Fn(&[f64]) -> C64> PointField for F {
    fn value(&self, x: &[f64]) -> C64 {
        self(x)
    }
}

macro_rules! forward_radial {
    ($t:ty) => {
        impl<T: RadialField + ?Sized> RadialField for $t {
            fn spectrum(&self) -> &AngularSpectrum {
                (**self).spectrum()
            }
            fn components(&self) -> Vec<usize> {
                (**self).components()
            }
            fn profile(&self, k: usize, r: f64) -> Profile {
                (**self).profile(k, r)
            }
            fn leading_power(&self, k: usize) -> f64 {
                (**self).leading_power(k)
            }
            fn gaussian_rate(&self) -> f64 {
                (**self).gaussian_rate()
            }
        }
    };
}

macro_rules! forward_solution {
    ($t:ty) => {
        impl<T: SolutionField + ?Sized> SolutionField for $t {
            fn spectrum(&self) -> &AngularSpectrum {
                (**self).spectrum()
            }
            fn components(&self) -> Vec<usize> {
                (**self).components()
            }
            fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
                (**self).profile(k, r, t)
            }
            fn leading_power(&self, k: usize) -> f64 {
                (**self).leading_power(k)
            }
            fn gaussian_rate(&self, t: f64) -> f64 {
                (**self).gaussian_rate(t)
            }
        }
    };
}

forward_radial!(&T);
forward_radial!(Box<T>);
forward_radial!(Arc<T>);
forward_solution!(&T);
forward_solution!(Box<T>);
forward_solution!(Arc<T>);

/// A solution field frozen at one time.
pub struct Snapshot<F> {
    pub field: F,
    pub t: f64,
}

impl<F: SolutionField> Snapshot<F> {
    pub fn new(field: F, t: f64) -> Self {
        Snapshot { field, t }
    }
}

impl<F: SolutionField> RadialField for Snapshot<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.field.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.field.components()
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        self.field.profile(k, r, self.t)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.field.leading_power(k)
    }
    fn gaussian_rate(&self) -> f64 {
        self.field.gaussian_rate(self.t)
    }
}

/// A radial field viewed as a time-independent solution field.
pub struct Steady<F>(pub F);

impl<F: RadialField> SolutionField for Steady<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.0.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.0.components()
    }
    fn profile(&self, k: usize, r: f64, _t: f64) -> Profile {
        self.0.profile(k, r)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.0.leading_power(k)
    }
    fn gaussian_rate(&self, _t: f64) -> f64 {
        self.0.gaussian_rate()
    }
}

/// Multiplication by e^{−|x|²/4} (sign = +1) or e^{+|x|²/4} (sign = −1).
pub struct GaussianFactor<F> {
    pub field: F,
    pub sign: f64,
}

/// T̃f = e^{−|x|²/4} f.
pub fn tilde_transform<F: RadialField>(field: F) -> GaussianFactor<F> {
    GaussianFactor { field, sign: 1.0 }
}

/// T̃⁻¹g = e^{|x|²/4} g.
pub fn tilde_inverse<F: RadialField>(field: F) -> GaussianFactor<F> {
    GaussianFactor { field, sign: -1.0 }
}

impl<F: RadialField> RadialField for GaussianFactor<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.field.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.field.components()
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        let p = self.field.profile(k, r);
        let e = libm::exp(-self.sign * r * r / 4.0);
        Profile {
            value: p.value * e,
            deriv: (p.deriv - p.value * (self.sign * r / 2.0)) * e,
        }
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.field.leading_power(k)
    }
    fn gaussian_rate(&self) -> f64 {
        self.field.gaussian_rate() + self.sign / 4.0
    }
}

/// Σ c_i F_i over fields sharing one angular spectrum.
pub struct Combination<F> {
    pub terms: Vec<(C64, F)>,
}

impl<F> Combination<F> {
    pub fn new(terms: Vec<(C64, F)>) -> Self {
        assert!(!terms.is_empty(), "empty combination");
        Combination { terms }
    }
}

fn union(mut a: Vec<usize>, b: Vec<usize>) -> Vec<usize> {
    a.extend(b);
    a.sort_unstable();
    a.dedup();
    a
}

impl<F: RadialField> RadialField for Combination<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.terms[0].1.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.terms.iter().fold(Vec::new(), |acc, t| union(acc, t.1.components()))
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        self.terms.iter().fold(Profile::default(), |acc, (c, f)| {
            if f.components().contains(&k) {
                acc + f.profile(k, r).scale(*c)
            } else {
                acc
            }
        })
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.1.components().contains(&k))
            .map(|t| t.1.leading_power(k))
            .fold(f64::INFINITY, f64::min)
    }
    fn gaussian_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.1.gaussian_rate()).fold(f64::INFINITY, f64::min)
    }
}

impl<F: SolutionField> SolutionField for Combination<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.terms[0].1.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.terms.iter().fold(Vec::new(), |acc, t| union(acc, t.1.components()))
    }
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
        self.terms.iter().fold(Profile::default(), |acc, (c, f)| {
            if f.components().contains(&k) {
                acc + f.profile(k, r, t).scale(*c)
            } else {
                acc
            }
        })
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.1.components().contains(&k))
            .map(|t| t.1.leading_power(k))
            .fold(f64::INFINITY, f64::min)
    }
    fn gaussian_rate(&self, t: f64) -> f64 {
        self.terms.iter().map(|x| x.1.gaussian_rate(t)).fold(f64::INFINITY, f64::min)
    }
}

/// factor · u(λx, λ²t).
pub struct Rescaled<F> {
    pub field: F,
    pub lambda: f64,
    pub factor: f64,
}

impl<F: SolutionField> SolutionField for Rescaled<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.field.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.field.components()
    }
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
        let l = self.lambda;
        let p = self.field.profile(k, l * r, l * l * t);
        Profile {
            value: p.value * self.factor,
            deriv: p.deriv * (self.factor * l),
        }
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.field.leading_power(k)
    }
    fn gaussian_rate(&self, t: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        l2 * self.field.gaussian_rate(l2 * t)
    }
}

/// ũ(x, t) = u(x, t₀ − t): turns a forward evolution into the backward time
/// variable used by the frequency diagnostics.
pub struct TimeReversed<F> {
    pub field: F,
    pub t0: f64,
}

impl<F: SolutionField> SolutionField for TimeReversed<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.field.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.field.components()
    }
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
        self.field.profile(k, r, self.t0 - t)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.field.leading_power(k)
    }
    fn gaussian_rate(&self, t: f64) -> f64 {
        self.field.gaussian_rate(self.t0 - t)
    }
}

/// w(r) = t^{−p} e^{−σ r²/(4t)}; G(x,t) is σ = 1, p = N/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub t: f64,
    pub sigma: f64,
    pub norm_power: f64,
}

impl Weight {
    /// G(x, t) = t^{−N/2} e^{−|x|²/(4t)}.
    pub fn gaussian(dim: usize, t: f64) -> Self {
        Weight {
            t,
            sigma: 1.0,
            norm_power: dim as f64 / 2.0,
        }
    }

    /// e^{+|x|²/4}, the weight of the image space of the tilde map.
    pub fn inverse_gaussian() -> Self {
        Weight {
            t: 1.0,
            sigma: -1.0,
            norm_power: 0.0,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        libm::pow(self.t, -self.norm_power) * libm::exp(-self.sigma * r * r / (4.0 * self.t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub radial_order: usize,
    pub angular_points: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            radial_order: 48,
            angular_points: 64,
        }
    }
}

impl QuadOptions {
    pub fn doubled(&self) -> Self {
        QuadOptions {
            radial_order: 2 * self.radial_order,
            angular_points: 2 * self.angular_points,
        }
    }
}

/// Nodes r_i and weights W_i with Σ W_i F(r_i) ≈ ∫₀^∞ F(r) r^{N−1} w(r) dr for
/// F(r) ≈ r^P e^{−Q r²} × smooth.
#[derive(Debug, Clone)]
pub struct RadialNodes {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

/// Memo of Gauss–Laguerre rules keyed by (exponent, order).
#[derive(Default)]
pub struct RuleCache {
    rules: Vec<(u64, usize, GaussRule)>,
}

impl RuleCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&mut self, a: f64, order: usize) -> Result<&GaussRule> {
        let key = a.to_bits();
        if let Some(i) = self.rules.iter().position(|e| e.0 == key && e.1 == order) {
            return Ok(&self.rules[i].2);
        }
        let rule = gauss_laguerre(order, a)?;
        self.rules.push((key, order, rule));
        Ok(&self.rules.last().expect("just pushed").2)
    }
}

/// Laguerre exponent of ∫ r^P e^{−…} r^{N−1} dr after s = r²/(4t).
pub fn laguerre_exponent(dim: usize, power: f64) -> f64 {
    power / 2.0 + dim as f64 / 2.0 - 1.0
}

pub fn radial_nodes(
    dim: usize,
    weight: Weight,
    power: f64,
    rate: f64,
    order: usize,
    cache: &mut RuleCache,
) -> Result<RadialNodes> {
    let a = laguerre_exponent(dim, power);
    if !(a > -1.0) {
        return Err(Error::invalid("field", "weighted integral diverges at the origin"));
    }
    let t = weight.t;
    let kappa = weight.sigma + 4.0 * rate * t;
    if !(kappa > 0.0) {
        return Err(Error::invalid("field", "integrand does not decay against the weight"));
    }
    let n = dim as f64;
    let ln_pref = (n - 1.0) * core::f64::consts::LN_2 + (n / 2.0 - weight.norm_power) * libm::log(t)
        - (a + 1.0) * libm::log(kappa);
    let rule = cache.get(a, order)?;
    let mut r = Vec::with_capacity(order);
    let mut w = Vec::with_capacity(order);
    for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
        if wu <= 0.0 {
            continue;
        }
        let s = u / kappa;
        let lw = ln_pref + libm::log(wu) + (n / 2.0 - 1.0 - a) * libm::log(s) + (kappa - weight.sigma) * s;
        r.push(2.0 * libm::sqrt(t * s));
        w.push(libm::exp(lw));
    }
    Ok(RadialNodes { r, w })
}

/// ∫₀^∞ F(r) r^{N−1} w(r) dr for an integrand behaving like r^P e^{−Q r²}.
pub fn radial_integral(
    dim: usize,
    weight: Weight,
    power: f64,
    rate: f64,
    order: usize,
    cache: &mut RuleCache,
    mut f: impl FnMut(f64) -> C64,
) -> Result<C64> {
    let nodes = radial_nodes(dim, weight, power, rate, order, cache)?;
    Ok(nodes.r.iter().zip(&nodes.w).map(|(&r, &w)| f(r) * w).sum())
}

/// Gaussian-weighted quadratic quantities of a field.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Forms {
    /// ∫ |u|² w
    pub l2: f64,
    /// ∫ |∂_r u|² w
    pub radial: f64,
    /// ∫ |∇_S u|²/r² w
    pub angular: f64,
    /// ∫ |(∇_S + iA)u|²/r² w
    pub angular_magnetic: f64,
    /// ∫ a |u|²/r² w
    pub a_term: f64,
    /// ∫ |u|²/r² w
    pub inv_sq: f64,
    /// ∫ |x|² |u|² w
    pub moment: f64,
    /// ∫ h |u|² w
    pub h_term: f64,
}

impl Forms {
    pub fn grad(&self) -> f64 {
        self.radial + self.angular
    }

    pub fn grad_magnetic(&self) -> f64 {
        self.radial + self.angular_magnetic
    }

    /// ∫ (|∇_A u|² − a|u|²/|x|² − h|u|²) w.
    pub fn dirichlet(&self) -> f64 {
        self.grad_magnetic() - self.a_term - self.h_term
    }
}

fn same_spectrum(a: &AngularSpectrum, b: &AngularSpectrum) -> bool {
    core::ptr::eq(a, b) || a == b
}

/// All quadratic quantities of a modal field in one pass over component pairs.
pub fn quadratic_forms<F: RadialField + ?Sized>(
    field: &F,
    weight: Weight,
    h: Option<&StaticPerturbation>,
    opts: &QuadOptions,
) -> Result<Forms> {
    let spec = field.spectrum();
    let dim = spec.dim();
    let comps = field.components();
    let rate = 2.0 * field.gaussian_rate();
    let order = opts.radial_order;
    let mut cache = RuleCache::new();
    let mut out = Forms::default();
    let diagonal = spec.is_diagonal();
    let h = h.filter(|h| !h.is_zero());
    for &k in &comps {
        for &j in &comps {
            if diagonal && k != j {
                continue;
            }
            let same = k == j;
            let plain = spec.plain_form(k, j);
            let mag = spec.magnetic_form(k, j);
            let af = spec.a_form(k, j);
            let zero = C64::new(0.0, 0.0);
            if !same && plain == zero && mag == zero && af == zero {
                continue;
            }
            let p = field.leading_power(k) + field.leading_power(j);
            let prod = |r: f64| field.profile(k, r).value * field.profile(j, r).value.conj();
            let low_ok = laguerre_exponent(dim, p - 2.0) > -1.0;
            let inv = if low_ok {
                radial_integral(dim, weight, p - 2.0, rate, order, &mut cache, |r| prod(r) / (r * r))?
            } else {
                C64::new(f64::INFINITY, 0.0)
            };
            let inv_or_zero = |c: C64| if c == zero { zero } else { c * inv };
            out.angular += inv_or_zero(plain).re;
            out.angular_magnetic += inv_or_zero(mag).re;
            out.a_term += inv_or_zero(af).re;
            if !same {
                continue;
            }
            out.inv_sq += inv.re;
            out.l2 += radial_integral(dim, weight, p, rate, order, &mut cache, &prod)?.re;
            out.moment += radial_integral(dim, weight, p + 2.0, rate, order, &mut cache, |r| prod(r) * r * r)?.re;
            let dpow = if low_ok { p - 2.0 } else { p };
            out.radial += radial_integral(dim, weight, dpow, rate, order, &mut cache, |r| {
                let d = field.profile(k, r).deriv;
                C64::new(d.norm_sqr(), 0.0)
            })?
            .re;
            if let Some(h) = h {
                let mut v = 0.0;
                if h.c0 != 0.0 {
                    v += h.c0 * radial_integral(dim, weight, p, rate, order, &mut cache, &prod)?.re;
                }
                if h.c1 != 0.0 {
                    let e = h.epsilon - 2.0;
                    v += h.c1
                        * radial_integral(dim, weight, p + e, rate, order, &mut cache, |r| prod(r) * libm::pow(r, e))?
                            .re;
                }
                out.h_term += v;
            }
        }
    }
    Ok(out)
}

/// ∫ |u|² w only.
pub fn weighted_l2<F: RadialField + ?Sized>(field: &F, weight: Weight, opts: &QuadOptions) -> Result<f64> {
    Ok(modal_inner(field, field, weight, opts)?.re)
}

/// Σ_k ∫ f_k conj(g_k) r^{N−1} w dr, i.e. ∫ f ḡ w dx by angular orthonormality.
pub fn modal_inner<F, G>(f: &F, g: &G, weight: Weight, opts: &QuadOptions) -> Result<C64>
where
    F: RadialField + ?Sized,
    G: RadialField + ?Sized,
{
    modal_inner_power(f, g, weight, 0.0, opts)
}

/// Σ_k ∫ f_k conj(g_k) r^{e} r^{N−1} w dr.
pub fn modal_inner_power<F, G>(f: &F, g: &G, weight: Weight, extra: f64, opts: &QuadOptions) -> Result<C64>
where
    F: RadialField + ?Sized,
    G: RadialField + ?Sized,
{
    if !same_spectrum(f.spectrum(), g.spectrum()) {
        return Err(Error::ConfigMismatch("fields use different angular spectra".into()));
    }
    let dim = f.spectrum().dim();
    let gc = g.components();
    let rate = f.gaussian_rate() + g.gaussian_rate();
    let mut cache = RuleCache::new();
    let mut sum = C64::new(0.0, 0.0);
    for k in f.components() {
        if !gc.contains(&k) {
            continue;
        }
        let p = f.leading_power(k) + g.leading_power(k) + extra;
        sum += radial_integral(dim, weight, p, rate, opts.radial_order, &mut cache, |r| {
            let v = f.profile(k, r).value * g.profile(k, r).value.conj();
            if extra == 0.0 {
                v
            } else {
                v * libm::pow(r, extra)
            }
        })?;
    }
    Ok(sum)
}

/// Value, radial derivative and tangential gradients of a modal field at r·θ.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointJet {
    pub value: C64,
    pub radial: C64,
    pub tangential: [C64; 2],
    pub tangential_magnetic: [C64; 2],
}

impl PointJet {
    pub fn grad_sqr(&self) -> f64 {
        self.radial.norm_sqr() + self.tangential[0].norm_sqr() + self.tangential[1].norm_sqr()
    }

    pub fn grad_magnetic_sqr(&self) -> f64 {
        self.radial.norm_sqr() + self.tangential_magnetic[0].norm_sqr() + self.tangential_magnetic[1].norm_sqr()
    }

    /// |∇|u||² = |Re(ū ∇u)|²/|u|² (zero where u vanishes).
    pub fn grad_modulus_sqr(&self) -> f64 {
        let m = self.value.norm();
        if m == 0.0 {
            return 0.0;
        }
        let c = self.value.conj();
        let rr = (c * self.radial).re;
        let t0 = (c * self.tangential[0]).re;
        let t1 = (c * self.tangential[1]).re;
        (rr * rr + t0 * t0 + t1 * t1) / (m * m)
    }
}

pub fn point_jet<F: RadialField + ?Sized>(field: &F, r: f64, unit: &[f64]) -> Result<PointJet> {
    let spec = field.spectrum();
    let mut jet = PointJet::default();
    for k in field.components() {
        let p = field.profile(k, r);
        let a = spec.psi_with_gradient(k, unit)?;
        jet.value += p.value * a.value;
        jet.radial += p.deriv * a.value;
        for i in 0..2 {
            jet.tangential[i] += p.value * a.grad[i] / r;
            jet.tangential_magnetic[i] += p.value * a.magnetic_grad[i] / r;
        }
    }
    Ok(jet)
}

pub fn point_value<F: RadialField + ?Sized>(field: &F, x: &[f64]) -> Result<C64> {
    let r = libm::sqrt(x.iter().map(|v| v * v).sum());
    if r == 0.0 {
        return Err(Error::invalid("x", "modal fields are not evaluated at the origin"));
    }
    let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
    let spec = field.spectrum();
    let mut v = C64::new(0.0, 0.0);
    for k in field.components() {
        v += field.profile(k, r).value * spec.psi(k, &unit)?;
    }
    Ok(v)
}

/// Angular product rule: trapezoid on S¹, Gauss–Legendre × trapezoid on S².
/// Returns (unit vectors, weights).
pub fn sphere_rule(dim: usize, points: usize) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    match dim {
        2 => {
            let w = 2.0 * PI / points as f64;
            Ok((
                (0..points)
                    .map(|j| {
                        let th = 2.0 * PI * j as f64 / points as f64;
                        [libm::cos(th), libm::sin(th), 0.0]
                    })
                    .collect(),
                vec![w; points],
            ))
        }
        3 => {
            let nt = (points / 2).max(2);
            let gl = gauss_legendre(nt);
            let mut u = Vec::with_capacity(nt * points);
            let mut w = Vec::with_capacity(nt * points);
            for (&c, &wc) in gl.nodes.iter().zip(&gl.weights) {
                let s = libm::sqrt(1.0 - c * c);
                for j in 0..points {
                    let ph = 2.0 * PI * j as f64 / points as f64;
                    u.push([s * libm::cos(ph), s * libm::sin(ph), c]);
                    w.push(wc * 2.0 * PI / points as f64);
                }
            }
            Ok((u, w))
        }
        _ => Err(Error::Unsupported(alloc::format!("pointwise angular quadrature in dimension {dim}"))),
    }
}

/// ∫_{ℝ^N} F(x) w(|x|) dx by radial rule × angular rule; F ≈ r^P e^{−Q r²}.
pub fn pointwise_integral(
    dim: usize,
    weight: Weight,
    power: f64,
    rate: f64,
    opts: &QuadOptions,
    mut f: impl FnMut(f64, &[f64]) -> Result<C64>,
) -> Result<C64> {
    let mut cache = RuleCache::new();
    let nodes = radial_nodes(dim, weight, power, rate, opts.radial_order, &mut cache)?;
    let (units, aw) = sphere_rule(dim, opts.angular_points)?;
    let mut sum = C64::new(0.0, 0.0);
    for (&r, &wr) in nodes.r.iter().zip(&nodes.w) {
        let mut inner = C64::new(0.0, 0.0);
        for (u, &wa) in units.iter().zip(&aw) {
            inner += f(r, &u[..dim])? * wa;
        }
        sum += inner * wr;
    }
    Ok(sum)
}

fn min_power<F: RadialField + ?Sized>(f: &F) -> f64 {
    f.components()
        .iter()
        .map(|&k| f.leading_power(k))
        .fold(f64::INFINITY, f64::min)
}

/// ∫ f ḡ w dx by pointwise product quadrature (N = 2, 3).
pub fn pointwise_inner<F, G>(f: &F, g: &G, weight: Weight, opts: &QuadOptions) -> Result<C64>
where
    F: RadialField + ?Sized,
    G: RadialField + ?Sized,
{
    let dim = f.spectrum().dim();
    let power = min_power(f) + min_power(g);
    if !power.is_finite() {
        return Ok(C64::new(0.0, 0.0));
    }
    let rate = f.gaussian_rate() + g.gaussian_rate();
    pointwise_integral(dim, weight, power, rate, opts, |r, unit| {
        Ok(point_jet(f, r, unit)?.value * point_jet(g, r, unit)?.value.conj())
    })
}
