//! Almgren–Poon frequency observables. Fields are taken in the backward time
//! variable t = t₀ − (forward time), so t → 0⁺ is the approach to the
//! observation point and G(x, t) is the heat kernel centred there.

use alloc::vec::Vec;

use crate::angular::ModeLabel;
use crate::field::{
    modal_inner, modal_inner_power, quadratic_forms, weighted_l2, Combination, Forms, QuadOptions, Rescaled,
    SolutionField, Snapshot, Weight,
};
use crate::ou::{eigenspace_basis, Eigenspace, ModeSum, SelfSimilarField, SpectralMode};
use crate::problem::StaticPerturbation;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyOptions {
    pub quad: QuadOptions,
    /// Recompute every H and D at doubled order and compare.
    pub check_quadrature: bool,
    /// Relative agreement demanded by that comparison.
    pub quad_tol: f64,
    /// |γ_fit − γ_{m,k}| accepted when matching modes.
    pub match_tol: f64,
    pub m_max: usize,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        FrequencyOptions {
            quad: QuadOptions::default(),
            check_quadrature: false,
            quad_tol: 1e-9,
            match_tol: 1e-4,
            m_max: 8,
        }
    }
}

fn checked(a: f64, b: impl FnOnce() -> Result<f64>, opts: &FrequencyOptions, what: &'static str) -> Result<f64> {
    if !opts.check_quadrature {
        return Ok(a);
    }
    let b = b()?;
    let d = (a - b).abs();
    if d > opts.quad_tol * b.abs().max(1e-300) && d > 1e-300 {
        return Err(Error::QuadratureNotConverged { what, discrepancy: d });
    }
    Ok(b)
}

/// H(t) = ∫ |u(x,t)|² G(x,t) dx.
pub fn compute_h<F: SolutionField + ?Sized>(field: &F, t: f64, opts: &FrequencyOptions) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "must be positive"));
    }
    let snap = Snapshot::new(field, t);
    let w = Weight::gaussian(field.spectrum().dim(), t);
    let a = weighted_l2(&snap, w, &opts.quad)?;
    checked(a, || weighted_l2(&snap, w, &opts.quad.doubled()), opts, "H(t)")
}

/// All weighted forms of u(·, t) against G(·, t).
pub fn forms_at<F: SolutionField + ?Sized>(
    field: &F,
    t: f64,
    h: Option<&StaticPerturbation>,
    opts: &FrequencyOptions,
) -> Result<Forms> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "must be positive"));
    }
    let snap = Snapshot::new(field, t);
    let w = Weight::gaussian(field.spectrum().dim(), t);
    let f = quadratic_forms(&snap, w, h, &opts.quad)?;
    if opts.check_quadrature {
        let g = quadratic_forms(&snap, w, h, &opts.quad.doubled())?;
        checked(f.l2, || Ok(g.l2), opts, "H(t)")?;
        let scale = g.grad_magnetic() + g.a_term.abs() + g.h_term.abs();
        let d = (f.dirichlet() - g.dirichlet()).abs();
        if d > opts.quad_tol * scale.max(1e-300) && d > 1e-300 {
            return Err(Error::QuadratureNotConverged {
                what: "D(t)",
                discrepancy: d,
            });
        }
        return Ok(g);
    }
    Ok(f)
}

/// D(t) = ∫ (|∇_A u|² − a|u|²/|x|² − h|u|²) G dx.
pub fn compute_d<F: SolutionField + ?Sized>(
    field: &F,
    t: f64,
    h: Option<&StaticPerturbation>,
    opts: &FrequencyOptions,
) -> Result<f64> {
    Ok(forms_at(field, t, h, opts)?.dirichlet())
}

/// t_j = t₀ 2^{−j}, j = 0..rungs, returned in increasing order.
pub fn geometric_ladder(t0: f64, rungs: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..rungs).map(|j| t0 * libm::pow(2.0, -(j as f64))).collect();
    v.reverse();
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySample {
    pub t: f64,
    pub h: f64,
    pub d: f64,
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    /// Ratio of successive increments on the finest triple.
    pub ratio: f64,
    /// The same extrapolation without the finest rung.
    pub previous: f64,
    /// |gamma_fit − previous|.
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    /// Increasing in t.
    pub samples: Vec<FrequencySample>,
    pub gamma_fit: f64,
    pub fit: FitDiagnostics,
    pub matched: Option<Eigenspace>,
}

impl FrequencyTrace {
    pub fn matched_labels(&self) -> Vec<(usize, ModeLabel)> {
        self.matched
            .as_ref()
            .map(|e| e.modes.iter().map(|m| (m.m, m.label)).collect())
            .unwrap_or_default()
    }
}

/// Aitken extrapolation of the last three values of a sequence converging
/// geometrically; returns (limit, ratio).
fn aitken(v: &[f64]) -> Result<(f64, f64)> {
    let [a, b, c] = [v[0], v[1], v[2]];
    let d1 = b - a;
    let d2 = c - b;
    let scale = c.abs().max(1.0);
    if d2.abs() <= 1e-13 * scale {
        return Ok((c, 0.0));
    }
    if d1 == 0.0 {
        return Err(Error::FitNotConverged("increments do not contract".into()));
    }
    let rho = d2 / d1;
    if !(rho.abs() < 1.0) {
        return Err(Error::FitNotConverged(alloc::format!(
            "increment ratio {rho:.3} does not contract"
        )));
    }
    Ok((c + d2 * rho / (1.0 - rho), rho))
}

/// t → 0⁺ limit of values sampled on a ladder whose t decreases along the slice.
/// Aitken's transform is iterated while the ladder is long enough: each pass
/// removes one geometric correction, so a mixture whose corrections go like
/// t^{2Δ}, t^{4Δ}, … converges much faster than with a single pass.
fn extrapolate(v: &[f64]) -> Result<(f64, FitDiagnostics)> {
    match v.len() {
        0 => Err(Error::FitNotConverged("no samples".into())),
        1 | 2 => {
            let last = v[v.len() - 1];
            let prev = v[0];
            Ok((
                last,
                FitDiagnostics {
                    ratio: f64::NAN,
                    previous: prev,
                    change: (last - prev).abs(),
                },
            ))
        }
        n => {
            let (_, ratio) = aitken(&v[n - 3..])?;
            let g = iterated_aitken(v);
            let previous = iterated_aitken(&v[..n - 1]);
            Ok((
                g,
                FitDiagnostics {
                    ratio,
                    previous,
                    change: (g - previous).abs(),
                },
            ))
        }
    }
}

/// Repeated Aitken passes; coarse rungs may not be in the asymptotic regime
/// yet, so each pass keeps the longest run of successful transforms ending
/// at the finest rung.
fn iterated_aitken(v: &[f64]) -> f64 {
    let mut level: Vec<f64> = v.to_vec();
    while level.len() >= 3 {
        let mut next: Vec<f64> = level
            .windows(3)
            .rev()
            .map_while(|w| aitken(w).ok().map(|x| x.0))
            .collect();
        if next.is_empty() {
            break;
        }
        next.reverse();
        level = next;
    }
    level[level.len() - 1]
}

/// H, D and 𝒩 = tD/H on the grid, with the t → 0⁺ limit of 𝒩 and the
/// eigenspace it lands in.
pub fn frequency<F: SolutionField + ?Sized>(
    field: &F,
    t_grid: &[f64],
    h: Option<&StaticPerturbation>,
    opts: &FrequencyOptions,
) -> Result<FrequencyTrace> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "empty"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t_grid", "must be strictly increasing"));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let f = forms_at(field, t, h, opts)?;
        if !(f.l2 > 0.0) {
            return Err(Error::TrivialField);
        }
        let d = f.dirichlet();
        samples.push(FrequencySample { t, h: f.l2, d, n: t * d / f.l2 });
    }
    let towards_zero: Vec<f64> = samples.iter().rev().map(|s| s.n).collect();
    let (gamma_fit, fit) = extrapolate(&towards_zero)?;
    let spec = field.spectrum();
    let matched = eigenspace_basis(gamma_fit, spec, opts.m_max, spec.len(), opts.match_tol).ok();
    Ok(FrequencyTrace {
        samples,
        gamma_fit,
        fit,
        matched,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanishingRate {
    /// t^{−2γ} H(t) per grid point.
    pub scaled: Vec<f64>,
    pub sup: f64,
    pub limit: f64,
    pub fit: FitDiagnostics,
}

/// sup and t → 0⁺ limit of t^{−2γ} H(t).
pub fn h_vanishing_rate<F: SolutionField + ?Sized>(
    field: &F,
    t_grid: &[f64],
    gamma: f64,
    opts: &FrequencyOptions,
) -> Result<VanishingRate> {
    let scaled: Vec<f64> = t_grid
        .iter()
        .map(|&t| Ok(compute_h(field, t, opts)? * libm::pow(t, -2.0 * gamma)))
        .collect::<Result<_>>()?;
    let towards_zero: Vec<f64> = scaled.iter().rev().copied().collect();
    let (limit, fit) = extrapolate(&towards_zero)?;
    if fit.change > 1e-3 * limit.abs().max(1e-3) {
        return Err(Error::FitNotConverged(alloc::format!(
            "limit of t^(-2γ)H moves by {:.3e} under refinement",
            fit.change
        )));
    }
    let sup = scaled.iter().copied().fold(0.0, f64::max);
    Ok(VanishingRate {
        scaled,
        sup,
        limit: limit.max(0.0),
        fit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaReport {
    /// β per mode at the largest Λ of the grid.
    pub betas: Vec<C64>,
    /// β per Λ (rows) and mode (columns).
    pub per_lambda: Vec<Vec<C64>>,
    /// max over modes of the Λ-spread, relative to the largest |β|.
    pub spread: f64,
}

/// β_{m,k} = Λ^{−2γ}∫ u(Λx, Λ²) conj Ṽ G(x,1) dx
///         + 2∫₀^Λ s^{1−2γ} ∫ h(sx) u(sx, s²) conj Ṽ G(x,1) dx ds,
/// u in the backward time variable. For static h the inner integral is done
/// per power of |x|, and the s-integral through s = Λ u^{1/ε} so the
/// integrable singularity s^{ε−1} becomes smooth.
pub fn beta_coefficients<F: SolutionField + ?Sized>(
    field: &F,
    modes: &[SpectralMode],
    gamma: f64,
    lambdas: &[f64],
    h: Option<&StaticPerturbation>,
    opts: &FrequencyOptions,
) -> Result<BetaReport> {
    if modes.is_empty() || lambdas.is_empty() {
        return Err(Error::invalid("modes", "need at least one mode and one Λ"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    let spec = field.spectrum();
    let dim = spec.dim();
    let g1 = Weight::gaussian(dim, 1.0);
    let h = h.filter(|h| !h.is_zero());
    let gl = gauss_legendre(32);
    let probe = |mode: &SpectralMode, s: f64, extra: f64| -> Result<C64> {
        // ∫ u(sx, s²) |x|^extra conj Ṽ G(x,1) dx
        let scaled = Rescaled { field, lambda: s, factor: 1.0 };
        let snap = Snapshot::new(scaled, 1.0);
        let v = ModeSum::single(spec, mode.clone());
        modal_inner_power(&snap, &v, g1, extra, &opts.quad)
    };
    let mut per_lambda = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let mut row = Vec::with_capacity(modes.len());
        for mode in modes {
            let mut b = probe(mode, lam, 0.0)? * libm::pow(lam, -2.0 * gamma);
            if let Some(h) = h {
                let mut integral = C64::new(0.0, 0.0);
                if h.c0 != 0.0 {
                    // 2∫₀^Λ s^{1−2γ} c₀ I₀(s) ds, Gauss–Legendre in s/Λ.
                    for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                        let s = lam * (x + 1.0) / 2.0;
                        let ww = w * lam / 2.0;
                        integral += probe(mode, s, 0.0)? * (2.0 * h.c0 * libm::pow(s, 1.0 - 2.0 * gamma) * ww);
                    }
                }
                if h.c1 != 0.0 {
                    // s = Λ u^{1/ε}: s^{1−2γ} s^{ε−2} ds = (Λ^ε/ε) s^{−2γ} du.
                    let e = h.epsilon;
                    for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                        let u = (x + 1.0) / 2.0;
                        let s = lam * libm::pow(u, 1.0 / e);
                        let jac = libm::pow(lam, e) / e * w / 2.0;
                        integral += probe(mode, s, e - 2.0)? * (2.0 * h.c1 * libm::pow(s, -2.0 * gamma) * jac);
                    }
                }
                b += integral;
            }
            row.push(b);
        }
        per_lambda.push(row);
    }
    let top = per_lambda.iter().flatten().map(|b| b.norm()).fold(0.0, f64::max);
    let mut spread: f64 = 0.0;
    for j in 0..modes.len() {
        for a in &per_lambda {
            for b in &per_lambda {
                spread = spread.max((a[j] - b[j]).norm());
            }
        }
    }
    let spread = if top > 0.0 { spread / top } else { 0.0 };
    let betas = per_lambda
        .iter()
        .zip(lambdas)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|x| x.0.clone())
        .unwrap_or_default();
    Ok(BetaReport {
        betas,
        per_lambda,
        spread,
    })
}

impl BetaReport {
    pub fn require_spread(&self, tol: f64) -> Result<()> {
        if self.spread > tol {
            return Err(Error::LambdaSpread {
                spread: self.spread,
                tolerance: tol,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupError {
    pub lambda: f64,
    /// sup over t ∈ [τ, 1] of the 𝓛_t distance.
    pub sup_l: f64,
    /// ∫_τ^1 of the squared 𝓗_t distance.
    pub h_integral: f64,
}

/// Distance between λ^{−2γ}u(λx, λ²t) and t^γ Σ β Ṽ(x/√t) for each λ.
/// 𝓗_t is ∫ (t|∇φ|² + |φ|² + t|φ|²/|x|²) G(x,t) dx.
pub fn blowup_distance<F: SolutionField + ?Sized>(
    field: &F,
    gamma: f64,
    modes: &[SpectralMode],
    betas: &[C64],
    lambdas: &[f64],
    tau: f64,
    opts: &FrequencyOptions,
) -> Result<Vec<BlowupError>> {
    if modes.len() != betas.len() {
        return Err(Error::invalid("betas", "one β per mode"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid("tau", "must lie in (0, 1)"));
    }
    let spec = field.spectrum();
    let reference = SelfSimilarField::new(spec, modes.iter().cloned().zip(betas.iter().copied()).collect());
    let gl = gauss_legendre(12);
    let mut out = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let scaled = Rescaled {
            field,
            lambda: lam,
            factor: libm::pow(lam, -2.0 * gamma),
        };
        let diff = Combination::new(alloc::vec![
            (C64::new(1.0, 0.0), &scaled as &dyn SolutionField),
            (C64::new(-1.0, 0.0), &reference as &dyn SolutionField),
        ]);
        let dist = |t: f64| -> Result<(f64, f64)> {
            let f = forms_at(&diff, t, None, opts)?;
            Ok((f.l2, t * f.grad() + f.l2 + t * f.inv_sq))
        };
        let mut sup: f64 = 0.0;
        let mut integral = 0.0;
        // Gauss–Legendre in ln t on [ln τ, 0]; the endpoints are sampled for the sup.
        let lt = libm::log(tau);
        for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
            let t = libm::exp(lt * (1.0 - x) / 2.0);
            let (l, hh) = dist(t)?;
            sup = sup.max(l);
            integral += hh * t * w * (-lt) / 2.0;
        }
        for t in [tau, 1.0] {
            sup = sup.max(dist(t)?.0);
        }
        out.push(BlowupError {
            lambda: lam,
            sup_l: libm::sqrt(sup),
            h_integral: integral,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub holds: bool,
    /// First index i with v[i+1] < v[i] − tol.
    pub violation: Option<usize>,
    pub scaled_h: Vec<f64>,
    pub frequency: Option<Vec<f64>>,
}

/// Index of the first step that decreases by more than tol·max(1, |v|).
pub fn monotone_check_values(v: &[f64], tol: f64) -> Option<usize> {
    v.windows(2).position(|w| w[1] < w[0] - tol * w[0].abs().max(1.0))
}

/// t^{exponent} H(t) nondecreasing on the grid; with h ≡ 0 also 𝒩(t).
pub fn monotone_h_check<F: SolutionField + ?Sized>(
    field: &F,
    t_grid: &[f64],
    exponent: f64,
    h: Option<&StaticPerturbation>,
    opts: &FrequencyOptions,
) -> Result<MonotoneReport> {
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t_grid", "must be strictly increasing"));
    }
    let unperturbed = h.is_none_or(|h| h.is_zero());
    let mut scaled = Vec::with_capacity(t_grid.len());
    let mut freq = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let f = forms_at(field, t, h, opts)?;
        scaled.push(libm::pow(t, exponent) * f.l2);
        if unperturbed && f.l2 > 0.0 {
            freq.push(t * f.dirichlet() / f.l2);
        }
    }
    let mut violation = monotone_check_values(&scaled, 1e-10);
    let frequency = if unperturbed {
        if violation.is_none() {
            violation = monotone_check_values(&freq, 1e-8);
        }
        Some(freq)
    } else {
        None
    };
    Ok(MonotoneReport {
        holds: violation.is_none(),
        violation,
        scaled_h: scaled,
        frequency,
    })
}

/// 𝓛 inner product of a backward-time field at t = 1 with one eigenfunction,
/// used for projections of blow-up limits.
pub fn project_at_unit_time<F: SolutionField + ?Sized>(field: &F, mode: &SpectralMode, opts: &QuadOptions) -> Result<C64> {
    let spec = field.spectrum();
    let v = ModeSum::single(spec, mode.clone());
    modal_inner(&Snapshot::new(field, 1.0), &v, Weight::gaussian(spec.dim(), 1.0), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{AngularPotential, AngularSpectrum};
    use crate::field::TimeReversed;
    use crate::kernel::expand_datum;
    use alloc::sync::Arc;
    use core::f64::consts::PI;

    fn ab(phi: f64, k: usize) -> Arc<AngularSpectrum> {
        Arc::new(AngularSpectrum::new(AngularPotential::AharonovBohm { circulation: phi }, k, None).unwrap())
    }

    fn mode(s: &Arc<AngularSpectrum>, m: usize, n: i64) -> SpectralMode {
        SpectralMode::new(m, s.find(ModeLabel::Wavenumber(n)).unwrap(), s).unwrap()
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn eigenfield_observables_are_exact() {
        let s = ab(0.3, 2);
        let m = mode(&s, 0, 0);
        let f = SelfSimilarField::eigenfield(s.clone(), m.clone());
        let o = FrequencyOptions::default();
        for &t in &[0.01, 0.3, 1.0, 2.5] {
            let h = compute_h(&f, t, &o).unwrap();
            assert!((h / libm::pow(t, 0.3) - 1.0).abs() < 1e-12);
            let d = compute_d(&f, t, None, &o).unwrap();
            assert!((d / (0.15 * libm::pow(t, -0.7)) - 1.0).abs() < 1e-10);
        }
        let tr = frequency(&f, &geometric_ladder(1.0, 10), None, &o).unwrap();
        for s in &tr.samples {
            assert!((s.n - 0.15).abs() < 1e-10);
        }
        assert!((tr.gamma_fit - 0.15).abs() < 1e-10);
        assert_eq!(tr.matched_labels(), [(0, ModeLabel::Wavenumber(0))]);
    }

    #[test]
    fn mixture_recovers_lowest_frequency() {
        let s = ab(0.3, 2);
        let f = SelfSimilarField::new(s.clone(), alloc::vec![(mode(&s, 0, 0), one()), (mode(&s, 1, 0), C64::new(0.5, 0.2))]);
        let o = FrequencyOptions::default();
        let tr = frequency(&f, &geometric_ladder(1.0, 8), None, &o).unwrap();
        assert!((tr.gamma_fit - 0.15).abs() < 1e-4, "{}", tr.gamma_fit);
        assert!(tr.samples.windows(2).all(|w| w[1].n >= w[0].n - 1e-12));
        // H' = 2D by central differences.
        let t = 0.4;
        let dt = 1e-4;
        let dh = (compute_h(&f, t + dt, &o).unwrap() - compute_h(&f, t - dt, &o).unwrap()) / (2.0 * dt);
        let d = compute_d(&f, t, None, &o).unwrap();
        assert!((dh - 2.0 * d).abs() < 1e-6 * d.abs());
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let s = Arc::new(AngularSpectrum::new(AngularPotential::SphereConstant { dim: 3, a: 0.0 }, 1, None).unwrap());
        let f = SelfSimilarField::eigenfield(s.clone(), SpectralMode::new(0, 1, &s).unwrap());
        let d = compute_d(&f, 0.7, None, &FrequencyOptions::default()).unwrap();
        assert!(d.abs() < 1e-14);
    }

    struct RadialGauss(Arc<AngularSpectrum>);

    impl crate::field::RadialField for RadialGauss {
        fn spectrum(&self) -> &AngularSpectrum {
            &self.0
        }
        fn components(&self) -> Vec<usize> {
            alloc::vec![1]
        }
        fn profile(&self, _k: usize, r: f64) -> crate::field::Profile {
            let v = libm::sqrt(4.0 * PI) * libm::exp(-r * r / 2.0);
            crate::field::Profile::new(C64::new(v, 0.0), C64::new(-r * v, 0.0))
        }
        fn leading_power(&self, _k: usize) -> f64 {
            0.0
        }
        fn gaussian_rate(&self) -> f64 {
            0.5
        }
    }

    #[test]
    fn gaussian_solution_h_and_monotonicity() {
        let s = Arc::new(AngularSpectrum::new(AngularPotential::SphereConstant { dim: 3, a: 0.0 }, 1, None).unwrap());
        let st = expand_datum(&RadialGauss(s.clone()), s.clone(), 40, 1, &QuadOptions::default()).unwrap();
        let t0 = 2.0;
        let back = TimeReversed { field: st.solution(), t0 };
        let o = FrequencyOptions::default();
        for &t in &[0.1, 0.7, 1.5] {
            // u(x, t₀ − t) = (1+2τ)^{−3/2} e^{−r²/(2(1+2τ))}, τ = t₀ − t; radial oracle.
            let tau = t0 - t;
            let c = 1.0 + 2.0 * tau;
            let rule = crate::quadrature::composite_legendre(0.0, 60.0, 120, 16);
            let exact = rule.integrate(|r| {
                let u = libm::pow(c, -1.5) * libm::exp(-r * r / (2.0 * c));
                4.0 * PI * r * r * u * u * libm::pow(t, -1.5) * libm::exp(-r * r / (4.0 * t))
            });
            let h = compute_h(&back, t, &o).unwrap();
            assert!((h - exact).abs() < 1e-8 * exact, "{h} {exact}");
        }
        let grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.1).collect();
        let rep = monotone_h_check(&back, &grid, 0.0, None, &o).unwrap();
        assert!(rep.holds, "{:?}", rep.violation);
    }

    #[test]
    fn scaling_identities() {
        let s = ab(0.3, 3);
        let f = SelfSimilarField::new(
            s.clone(),
            alloc::vec![(mode(&s, 0, 1), one()), (mode(&s, 2, -1), C64::new(0.0, 0.7)), (mode(&s, 1, 0), C64::new(0.3, 0.0))],
        );
        let o = FrequencyOptions::default();
        let lam = 0.6;
        let scaled = Rescaled { field: &f, lambda: lam, factor: 1.0 };
        for &t in &[0.2, 1.0, 2.0] {
            let a = compute_h(&scaled, t, &o).unwrap();
            let b = compute_h(&f, lam * lam * t, &o).unwrap();
            assert!((a - b).abs() < 1e-10 * b);
            let na = t * compute_d(&scaled, t, None, &o).unwrap() / a;
            let nb = lam * lam * t * compute_d(&f, lam * lam * t, None, &o).unwrap() / b;
            assert!((na - nb).abs() < 1e-10);
        }
    }

    #[test]
    fn vanishing_rate_examples() {
        let s = ab(0.3, 2);
        let m = mode(&s, 0, 0);
        let o = FrequencyOptions::default();
        let grid = geometric_ladder(1.0, 8);
        let f = SelfSimilarField::eigenfield(s.clone(), m.clone());
        assert!((h_vanishing_rate(&f, &grid, m.gamma, &o).unwrap().limit - 1.0).abs() < 1e-10);
        let f2 = SelfSimilarField::new(s.clone(), alloc::vec![(m.clone(), C64::new(2.0, 0.0))]);
        assert!((h_vanishing_rate(&f2, &grid, m.gamma, &o).unwrap().limit - 4.0).abs() < 1e-9);
        let up = mode(&s, 1, 0);
        let f3 = SelfSimilarField::eigenfield(s.clone(), up);
        assert!(h_vanishing_rate(&f3, &grid, m.gamma, &o).unwrap().limit < 1e-6);
    }

    #[test]
    fn beta_examples() {
        let s = ab(0.3, 2);
        let modes = [mode(&s, 0, 0), mode(&s, 0, 1), mode(&s, 1, 0)];
        let o = FrequencyOptions::default();
        let lams = [0.1, 0.2, 0.3, 0.4, 0.5];
        let f = SelfSimilarField::eigenfield(s.clone(), modes[0].clone());
        let r = beta_coefficients(&f, &modes, modes[0].gamma, &lams, None, &o).unwrap();
        assert!((r.betas[0] - 1.0).norm() < 1e-8);
        assert!(r.betas[1].norm() < 1e-8 && r.betas[2].norm() < 1e-8);
        assert!(r.spread <= 1e-8);
        let c = C64::new(0.5, -2.0);
        let f = SelfSimilarField::new(s.clone(), alloc::vec![(modes[0].clone(), c)]);
        let r = beta_coefficients(&f, &modes, modes[0].gamma, &lams, None, &o).unwrap();
        assert!((r.betas[0] - c).norm() < 1e-8);
        // h ≡ c₀: the damped eigenfield solves the perturbed equation and the
        // correction integral restores Λ-independence.
        let h = StaticPerturbation::new(0.8, 0.0, 1.0).unwrap();
        let f = SelfSimilarField::eigenfield(s.clone(), modes[0].clone()).with_damping(0.8);
        let r = beta_coefficients(&f, &modes[..1], modes[0].gamma, &lams, Some(&h), &o).unwrap();
        assert!(r.spread < 1e-10, "{}", r.spread);
        assert!((r.betas[0] - 1.0).norm() < 1e-10);
        assert!(r.require_spread(1e-6).is_ok());
    }

    #[test]
    fn blowup_examples() {
        let s = ab(0.3, 2);
        let m = mode(&s, 0, 0);
        let o = FrequencyOptions::default();
        let f = SelfSimilarField::eigenfield(s.clone(), m.clone());
        let e = blowup_distance(&f, m.gamma, core::slice::from_ref(&m), &[one()], &[0.5, 0.1], 0.1, &o).unwrap();
        assert!(e.iter().all(|x| x.sup_l < 1e-12 && x.h_integral < 1e-20));
        let z = blowup_distance(&f, m.gamma, core::slice::from_ref(&m), &[C64::new(0.0, 0.0)], &[0.5], 0.1, &o).unwrap();
        assert!(z[0].sup_l > 0.1);
        // Two modes: the error decays like λ^{2Δγ} = λ².
        let g = SelfSimilarField::new(s.clone(), alloc::vec![(m.clone(), one()), (mode(&s, 1, 0), one())]);
        let e = blowup_distance(&g, m.gamma, core::slice::from_ref(&m), &[one()], &[0.2, 0.1], 0.1, &o).unwrap();
        let slope = libm::log(e[0].sup_l / e[1].sup_l) / libm::log(2.0);
        assert!((slope - 2.0).abs() < 1e-8);
    }

    #[test]
    fn monotone_examples() {
        let s = ab(0.3, 2);
        let m = mode(&s, 0, 0);
        let f = SelfSimilarField::eigenfield(s.clone(), m.clone());
        let o = FrequencyOptions::default();
        let r = monotone_h_check(&f, &geometric_ladder(1.0, 6), -2.0 * m.gamma, None, &o).unwrap();
        assert!(r.holds);
        assert_eq!(monotone_check_values(&[1.0, 2.0, 1.5, 3.0], 1e-10), Some(1));
        assert_eq!(monotone_check_values(&[1.0, 1.0 - 1e-12], 1e-10), None);
    }

    #[test]
    fn trivial_field_is_rejected() {
        let s = ab(0.3, 2);
        let f = SelfSimilarField::new(s.clone(), alloc::vec![(mode(&s, 0, 0), C64::new(0.0, 0.0))]);
        assert!(matches!(frequency(&f, &[0.5, 1.0], None, &FrequencyOptions::default()), Err(Error::TrivialField)));
    }
}
