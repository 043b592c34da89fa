//! Numerical property tests for the weighted Hardy, moment, Sobolev and
//! diamagnetic inequalities. Each check evaluates both sides on a test field
//! and returns LHS − RHS (a margin that must be nonnegative).
//!
//! Random fields are finite sums Σ c_j r^{p_j} e^{−q r²} ψ_{k_j}(θ) with one
//! term per angular mode and a shared Gaussian rate, so every quadratic form
//! is a Gauss–Laguerre integral of a polynomial and is computed exactly.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::angular::{AngularPotential, AngularSpectrum};
use crate::field::{
    point_jet, pointwise_integral, quadratic_forms, Forms, Profile, QuadOptions, RadialField, Weight,
};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub k: usize,
    pub p: f64,
    pub c: C64,
}

#[derive(Debug, Clone)]
pub struct TestField {
    spectrum: Arc<AngularSpectrum>,
    terms: Vec<Term>,
    q: f64,
}

impl TestField {
    pub fn new(spectrum: Arc<AngularSpectrum>, terms: Vec<Term>, q: f64) -> Result<Self> {
        if terms.is_empty() || terms.iter().all(|t| t.c == C64::new(0.0, 0.0)) {
            return Err(Error::ZeroNorm);
        }
        let mut ks: Vec<usize> = terms.iter().map(|t| t.k).collect();
        ks.sort_unstable();
        ks.dedup();
        if ks.len() != terms.len() {
            return Err(Error::invalid("terms", "one term per angular mode"));
        }
        for t in &terms {
            spectrum.pair(t.k)?;
        }
        Ok(TestField { spectrum, terms, q })
    }

    /// r^p e^{−q r²} ψ_k.
    pub fn bump(spectrum: Arc<AngularSpectrum>, k: usize, p: f64, q: f64) -> Result<Self> {
        Self::new(spectrum, alloc::vec![Term { k, p, c: C64::new(1.0, 0.0) }], q)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn rate(&self) -> f64 {
        self.q
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.c *= s;
        }
        self
    }

    /// Rescales so that ∫ |u|² G(x,t) dx = 1.
    pub fn normalized(self, t: f64, opts: &QuadOptions) -> Result<Self> {
        let n = weighted_norms(&self, t, opts)?.l2;
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(1.0 / libm::sqrt(n)))
    }

    fn term(&self, k: usize) -> Option<&Term> {
        self.terms.iter().find(|t| t.k == k)
    }
}

impl RadialField for TestField {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.spectrum
    }
    fn components(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.k).collect()
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        let Some(t) = self.term(k) else {
            return Profile::default();
        };
        let v = libm::pow(r, t.p) * libm::exp(-self.q * r * r);
        Profile::new(t.c * v, t.c * (v * (t.p / r - 2.0 * self.q * r)))
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.term(k).map_or(0.0, |t| t.p)
    }
    fn gaussian_rate(&self) -> f64 {
        self.q
    }
}

/// The weighted quantities against G(·, t).
pub fn weighted_norms<F: RadialField + ?Sized>(field: &F, t: f64, opts: &QuadOptions) -> Result<Forms> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "must be positive"));
    }
    quadratic_forms(field, Weight::gaussian(field.spectrum().dim(), t), None, opts)
}

/// 1/((N−2)t)‖u‖² + 4/(N−2)²‖∇u‖² − ‖u/|x|‖², N ≥ 3.
pub fn hardy_parabolic_margin(f: &Forms, dim: usize, t: f64) -> Result<f64> {
    if dim < 3 {
        return Err(Error::invalid("dim", "the parabolic Hardy inequality needs N ≥ 3"));
    }
    let n2 = dim as f64 - 2.0;
    Ok(f.l2 / (n2 * t) + 4.0 / (n2 * n2) * f.grad() - f.inv_sq)
}

/// ∫(|∇_A u|² − a|u|²/|x|²)G + (N−2)/(4t)‖u‖² − (μ₁ + (N−2)²/4)‖u/|x|‖².
pub fn hardy_magnetic_margin(f: &Forms, spectrum: &AngularSpectrum, t: f64) -> Result<f64> {
    spectrum.require_hardy()?;
    let dim = spectrum.dim() as f64;
    let c = spectrum.mu(1) + (dim - 2.0) * (dim - 2.0) / 4.0;
    Ok(f.grad_magnetic() - f.a_term + (dim - 2.0) / (4.0 * t) * f.l2 - c * f.inv_sq)
}

/// ‖∇_A u‖² + N/(4t)‖u‖² − 1/(16t²)‖|x|u‖².
pub fn moment_margin(f: &Forms, dim: usize, t: f64) -> f64 {
    f.grad_magnetic() + dim as f64 / (4.0 * t) * f.l2 - f.moment / (16.0 * t * t)
}

pub fn check_hardy_parabolic<F: RadialField + ?Sized>(field: &F, t: f64, opts: &QuadOptions) -> Result<f64> {
    hardy_parabolic_margin(&weighted_norms(field, t, opts)?, field.spectrum().dim(), t)
}

pub fn check_hardy_magnetic<F: RadialField + ?Sized>(field: &F, t: f64, opts: &QuadOptions) -> Result<f64> {
    hardy_magnetic_margin(&weighted_norms(field, t, opts)?, field.spectrum(), t)
}

pub fn check_moment_bound<F: RadialField + ?Sized>(field: &F, t: f64, opts: &QuadOptions) -> Result<f64> {
    Ok(moment_margin(&weighted_norms(field, t, opts)?, field.spectrum().dim(), t))
}

/// ∫ (|∇_A u|² − |∇|u||²) G dx by pointwise quadrature; nonnegative because
/// the integrand is.
pub fn check_diamagnetic<F: RadialField + ?Sized>(field: &F, t: f64, opts: &QuadOptions) -> Result<f64> {
    let dim = field.spectrum().dim();
    let power = min_power(field) - 2.0;
    let v = pointwise_integral(dim, Weight::gaussian(dim, t), power, 2.0 * field.gaussian_rate(), opts, |r, u| {
        let j = point_jet(field, r, u)?;
        Ok(C64::new(j.grad_magnetic_sqr() - j.grad_modulus_sqr(), 0.0))
    })?;
    Ok(v.re)
}

fn min_power<F: RadialField + ?Sized>(f: &F) -> f64 {
    f.components().iter().map(|&k| f.leading_power(k)).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevReport {
    /// (∫|u|^s G^{s/2})^{2/s} / ‖u‖²_{𝓗_t}
    pub ratio: f64,
    /// The same ratio at t/4.
    pub ratio_quarter: f64,
    /// log₄ of LHS(t/4)/LHS(t) for the profile u(x/√t); the law predicts
    /// (N/s)(s−2)/2.
    pub exponent: f64,
    pub predicted: f64,
}

/// Weighted Sobolev ratio for s in [2, 2N/(N−2)] (any s ≥ 2 when N = 2),
/// with the t-scaling law probed on the rescaled profile x ↦ u(x/√t).
pub fn check_weighted_sobolev<F: RadialField + ?Sized>(field: &F, s: f64, t: f64, opts: &QuadOptions) -> Result<SobolevReport> {
    let dim = field.spectrum().dim();
    let n = dim as f64;
    if s < 2.0 || (dim >= 3 && s > 2.0 * n / (n - 2.0)) {
        return Err(Error::invalid("s", "outside the Sobolev range"));
    }
    let lhs = |tt: f64| -> Result<(f64, f64)> {
        // u_tt(x) = u(x √(t/tt)): the same profile observed at scale tt.
        let lam = libm::sqrt(t / tt);
        let scaled = Dilated { field, lambda: lam };
        let w = Weight {
            t: tt,
            sigma: s / 2.0,
            norm_power: n * s / 4.0,
        };
        let power = s * min_power(field);
        let rate = s * field.gaussian_rate() * lam * lam;
        let v = pointwise_integral(dim, w, power, rate, opts, |r, u| {
            let j = point_jet(&scaled, r, u)?;
            Ok(C64::new(libm::pow(j.value.norm(), s), 0.0))
        })?
        .re;
        let f = weighted_norms(&scaled, tt, opts)?;
        let h = tt * f.grad() + f.l2 + tt * f.inv_sq;
        Ok((libm::pow(v, 2.0 / s), h))
    };
    let (a, ha) = lhs(t)?;
    let (b, hb) = lhs(t / 4.0)?;
    if a == 0.0 {
        return Ok(SobolevReport {
            ratio: 0.0,
            ratio_quarter: 0.0,
            exponent: f64::NAN,
            predicted: (n / s) * (s - 2.0) / 2.0,
        });
    }
    Ok(SobolevReport {
        ratio: a / ha,
        ratio_quarter: b / hb,
        exponent: libm::log(b / a) / libm::log(4.0) - libm::log(hb / ha) / libm::log(4.0),
        predicted: (n / s) * (s - 2.0) / 2.0,
    })
}

/// x ↦ u(λx).
struct Dilated<'a, F: ?Sized> {
    field: &'a F,
    lambda: f64,
}

impl<F: RadialField + ?Sized> RadialField for Dilated<'_, F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.field.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.field.components()
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        let p = self.field.profile(k, self.lambda * r);
        Profile::new(p.value, p.deriv * self.lambda)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.field.leading_power(k)
    }
    fn gaussian_rate(&self) -> f64 {
        self.field.gaussian_rate() * self.lambda * self.lambda
    }
}

/// Parameter ranges for random test fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldFamily {
    /// Modes are drawn from the first `modes` angular indices.
    pub modes: usize,
    pub max_terms: usize,
    /// p is drawn from (p_min, p_min + p_span) with p_min = 1 − N/2 + 0.05.
    pub p_span: f64,
    pub q_range: (f64, f64),
}

impl Default for FieldFamily {
    fn default() -> Self {
        FieldFamily {
            modes: 5,
            max_terms: 3,
            p_span: 3.0,
            q_range: (0.02, 1.0),
        }
    }
}

/// Field number `index` of the seeded family: reproducible and independent of
/// how the indices are split among workers.
pub fn random_field(spectrum: &Arc<AngularSpectrum>, family: &FieldFamily, seed: u64, index: u64) -> Result<TestField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let avail = family.modes.min(spectrum.len()).max(1);
    let n_terms = rng.random_range(1..=family.max_terms.min(avail).max(1));
    let mut ks: Vec<usize> = (1..=avail).collect();
    // Partial Fisher–Yates for distinct modes.
    for i in 0..n_terms {
        let j = rng.random_range(i..avail);
        ks.swap(i, j);
    }
    let p_min = 1.0 - spectrum.dim() as f64 / 2.0 + 0.05;
    let q = rng.random_range(family.q_range.0..family.q_range.1);
    let terms = ks[..n_terms]
        .iter()
        .map(|&k| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Term {
                k,
                p: p_min + rng.random_range(0.0..family.p_span),
                c: C64::new(re, im),
            }
        })
        .collect();
    TestField::new(spectrum.clone(), terms, q)
}

/// Worst margins over a batch, per inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteReport {
    pub fields: usize,
    pub hardy_parabolic: Option<f64>,
    pub hardy_magnetic: f64,
    pub moment: f64,
    pub diamagnetic: f64,
    /// Largest Sobolev ratio seen (s = `sobolev_s`).
    pub sobolev_ratio: f64,
    /// Largest deviation of the fitted Sobolev t-exponent from the law.
    pub sobolev_exponent_error: f64,
}

impl SuiteReport {
    fn empty(dim: usize) -> Self {
        SuiteReport {
            fields: 0,
            hardy_parabolic: (dim >= 3).then_some(f64::INFINITY),
            hardy_magnetic: f64::INFINITY,
            moment: f64::INFINITY,
            diamagnetic: f64::INFINITY,
            sobolev_ratio: 0.0,
            sobolev_exponent_error: 0.0,
        }
    }

    pub fn merge(self, o: SuiteReport) -> SuiteReport {
        SuiteReport {
            fields: self.fields + o.fields,
            hardy_parabolic: match (self.hardy_parabolic, o.hardy_parabolic) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
            hardy_magnetic: self.hardy_magnetic.min(o.hardy_magnetic),
            moment: self.moment.min(o.moment),
            diamagnetic: self.diamagnetic.min(o.diamagnetic),
            sobolev_ratio: self.sobolev_ratio.max(o.sobolev_ratio),
            sobolev_exponent_error: self.sobolev_exponent_error.max(o.sobolev_exponent_error),
        }
    }

    pub fn worst(&self) -> f64 {
        [self.hardy_magnetic, self.moment, self.diamagnetic, self.hardy_parabolic.unwrap_or(f64::INFINITY)]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.worst() >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub times: [f64; 3],
    pub family: FieldFamily,
    pub quad: QuadOptions,
    /// Coarser rule for the pointwise checks.
    pub pointwise: QuadOptions,
    pub sobolev_s: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            times: [0.25, 1.0, 4.0],
            family: FieldFamily::default(),
            quad: QuadOptions { radial_order: 24, angular_points: 32 },
            pointwise: QuadOptions { radial_order: 20, angular_points: 16 },
            sobolev_s: 3.0,
        }
    }
}

/// Runs every check on fields `range` of the seeded family at each time.
pub fn run_suite(
    spectrum: &Arc<AngularSpectrum>,
    seed: u64,
    range: core::ops::Range<u64>,
    opts: &SuiteOptions,
) -> Result<SuiteReport> {
    let dim = spectrum.dim();
    let mut rep = SuiteReport::empty(dim);
    for i in range {
        let field = random_field(spectrum, &opts.family, seed, i)?;
        for &t in &opts.times {
            let field = field.clone().normalized(t, &opts.quad)?;
            let f = weighted_norms(&field, t, &opts.quad)?;
            if let Some(w) = rep.hardy_parabolic.as_mut() {
                *w = w.min(hardy_parabolic_margin(&f, dim, t)?);
            }
            rep.hardy_magnetic = rep.hardy_magnetic.min(hardy_magnetic_margin(&f, spectrum, t)?);
            rep.moment = rep.moment.min(moment_margin(&f, dim, t));
            rep.diamagnetic = rep.diamagnetic.min(check_diamagnetic(&field, t, &opts.pointwise)?);
            let s = check_weighted_sobolev(&field, opts.sobolev_s, t, &opts.pointwise)?;
            rep.sobolev_ratio = rep.sobolev_ratio.max(s.ratio);
            rep.sobolev_exponent_error = rep.sobolev_exponent_error.max((s.exponent - s.predicted).abs());
        }
        rep.fields += 1;
    }
    Ok(rep)
}

/// ε values for [`hardy_best_constant_estimate`]. For N = 2 the ratio is
/// μ₁ + ε exactly, so the last rung sits 1e-3 above the constant.
pub const DEFAULT_LADDER: [f64; 8] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.003, 0.001];

/// ‖∇_A u‖²_{L²} / ‖u/|x|‖²_{L²} (unweighted) for u = r^{−(N−2)/2+ε}e^{−r²}ψ₁ along
/// a sharpening ladder of ε. Converges from above to μ₁ + ((N−2)/2)².
pub fn hardy_best_constant_estimate(spectrum: &Arc<AngularSpectrum>, epsilons: &[f64], opts: &QuadOptions) -> Result<Vec<(f64, f64)>> {
    spectrum.require_hardy()?;
    let dim = spectrum.dim() as f64;
    if !matches!(spectrum.potential(), AngularPotential::AharonovBohm { .. } | AngularPotential::SphereConstant { .. })
        && !spectrum.is_diagonal()
    {
        return Err(Error::Unsupported("best-constant ladder needs a diagonal spectrum".into()));
    }
    let flat = Weight {
        t: 1.0,
        sigma: 0.0,
        norm_power: 0.0,
    };
    // u ~ r^{−(N−2)/2+ε} is the borderline profile for the radial Hardy term.
    epsilons
        .iter()
        .map(|&e| {
            if !(e > 0.0) {
                return Err(Error::invalid("epsilon", "must be positive"));
            }
            let f = TestField::bump(spectrum.clone(), 1, -(dim - 2.0) / 2.0 + e, 1.0)?;
            let forms = quadratic_forms(&f, flat, None, opts)?;
            Ok((e, (forms.grad_magnetic() - forms.a_term) / forms.inv_sq))
        })
        .collect()
}
