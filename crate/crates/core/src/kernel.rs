//! Representation kernel of the unperturbed flow and the two propagators built
//! on it: the Bessel-series kernel integral and the coefficient decay
//! c_{m,k} ↦ c_{m,k}(1+t)^{−γ̃_{m,k}} in the self-similar variables.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::angular::{AngularPotential, AngularSpectrum, ModeLabel};
use crate::field::{
    modal_inner, modal_inner_power, sphere_rule, PointField, Profile, QuadOptions, RadialField, SolutionField,
    Weight,
};
use crate::ou::{exponents, SpectralMode};
use crate::quadrature::composite_legendre;
use crate::special::{bessel_i_scaled, harmonic_dimension, ln_gamma, sphere_area, zonal_harmonic};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    /// Angular truncation handed to the angular solver.
    pub k_max: usize,
    pub tail_tol: f64,
    /// The improper integral over y is cut at |y| = R.
    pub domain_radius: f64,
    pub radial_panels: usize,
    pub panel_order: usize,
    pub angular_points: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            k_max: 40,
            tail_tol: 1e-9,
            domain_radius: 12.0,
            radial_panels: 96,
            panel_order: 12,
            angular_points: 64,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) {
            return Err(Error::invalid("tail_tol", "must be positive"));
        }
        if !(self.domain_radius > 0.0) {
            return Err(Error::invalid("domain_radius", "must be positive"));
        }
        if self.radial_panels == 0 || self.panel_order == 0 || self.angular_points < 4 {
            return Err(Error::invalid("quadrature", "orders too small"));
        }
        Ok(())
    }
}

/// Upper bound (z/2)^β / Γ(β+1) for e^{−z} I_β(z).
pub fn bessel_tail_bound(beta: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if beta == 0.0 { 1.0 } else { 0.0 };
    }
    libm::exp(beta * libm::log(z / 2.0) - ln_gamma(beta + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: C64,
    /// Bound on the omitted part of the Bessel series.
    pub tail: f64,
}

/// One group of the kernel series: a Bessel order with its angular reproducing
/// part, either a single eigenfunction or a whole spherical-harmonic degree.
#[derive(Debug, Clone)]
enum Group {
    Pair { k: usize, beta: f64 },
    Degree { l: usize, beta: f64 },
}

#[derive(Debug, Clone)]
pub struct HeatKernel {
    spectrum: Arc<AngularSpectrum>,
    config: KernelConfig,
    groups: Vec<Group>,
    /// (β, angular weight) of the first omitted terms, for the tail bound.
    omitted: Vec<(f64, f64)>,
}

impl HeatKernel {
    pub fn new(spectrum: Arc<AngularSpectrum>, config: KernelConfig) -> Result<Self> {
        config.validate()?;
        spectrum.require_hardy()?;
        let dim = spectrum.dim();
        let h = (dim as f64 - 2.0) / 2.0;
        let mut groups = Vec::new();
        let mut omitted = Vec::new();
        match *spectrum.potential() {
            AngularPotential::SphereConstant { dim, a } => {
                let l_max = spectrum.pairs().iter().filter_map(|p| p.label.degree()).max().unwrap_or(0);
                let beta_l = |l: usize| libm::sqrt(h * h + (l * (l + dim - 2)) as f64 - a);
                for l in 0..=l_max {
                    groups.push(Group::Degree { l, beta: beta_l(l) });
                }
                for l in l_max + 1..l_max + 400 {
                    omitted.push((beta_l(l), harmonic_dimension(dim, l) as f64 / sphere_area(dim)));
                }
            }
            AngularPotential::AharonovBohm { circulation } => {
                for k in 1..=spectrum.len() {
                    groups.push(Group::Pair { k, beta: exponents(spectrum.mu(k), dim)?.1 });
                }
                let n_max = spectrum.pairs().iter().filter_map(|p| p.label.wavenumber()).map(i64::abs).max().unwrap_or(0);
                for n in n_max + 1..n_max + 400 {
                    for s in [n, -n] {
                        omitted.push(((s as f64 - circulation).abs(), 1.0 / (2.0 * core::f64::consts::PI)));
                    }
                }
            }
            AngularPotential::Fourier { .. } => {
                for k in 1..=spectrum.len() {
                    groups.push(Group::Pair { k, beta: exponents(spectrum.mu(k), dim)?.1 });
                }
                // Beyond the computed pairs μ grows like n²; the next orders are
                // extrapolated in half steps from the last computed β.
                let last = spectrum.len().max(1);
                let b = exponents(spectrum.mu(last), dim)?.1;
                for j in 1..800 {
                    omitted.push((b + j as f64 / 2.0, 1.0 / (2.0 * core::f64::consts::PI)));
                }
            }
        }
        Ok(HeatKernel {
            spectrum,
            config,
            groups,
            omitted,
        })
    }

    pub fn from_potential(potential: AngularPotential, config: KernelConfig) -> Result<Self> {
        let spec = AngularSpectrum::new(potential, config.k_max, None)?;
        Self::new(Arc::new(spec), config)
    }

    pub fn spectrum(&self) -> &Arc<AngularSpectrum> {
        &self.spectrum
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    /// Tail bound of the Bessel series at z, without the radial prefactor.
    pub fn series_tail(&self, z: f64) -> f64 {
        let mut sum = 0.0;
        for &(beta, w) in &self.omitted {
            let b = bessel_tail_bound(beta, z) * w;
            sum += b;
            if beta > z && b < 1e-18 * sum.max(1e-300) {
                break;
            }
        }
        sum
    }

    /// K(x, y) = ½(|x||y|)^{−(N−2)/2} e^{−(|x|−|y|)²/4} Σ_k ψ_k(ŷ) conj ψ_k(x̂) e^{−z} I_{β_k}(z),
    /// z = |x||y|/2.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<KernelValue> {
        let dim = self.spectrum.dim();
        if x.len() != dim || y.len() != dim {
            return Err(Error::invalid("x", "point dimension does not match the problem"));
        }
        let rx = norm(x);
        let ry = norm(y);
        if rx == 0.0 || ry == 0.0 {
            return Err(Error::invalid("x", "kernel is evaluated away from the origin"));
        }
        let ux: Vec<f64> = x.iter().map(|v| v / rx).collect();
        let uy: Vec<f64> = y.iter().map(|v| v / ry).collect();
        let z = rx * ry / 2.0;
        let h = (dim as f64 - 2.0) / 2.0;
        let pref = 0.5 * libm::pow(rx * ry, -h) * libm::exp(-(rx - ry) * (rx - ry) / 4.0);
        let mut sum = C64::new(0.0, 0.0);
        for g in &self.groups {
            match *g {
                Group::Pair { k, beta } => {
                    let a = self.spectrum.psi(k, &uy)? * self.spectrum.psi(k, &ux)?.conj();
                    sum += a * bessel_i_scaled(beta, z);
                }
                Group::Degree { l, beta } => {
                    let c: f64 = ux.iter().zip(&uy).map(|(a, b)| a * b).sum();
                    sum += zonal_harmonic(dim, l, c.clamp(-1.0, 1.0)) * bessel_i_scaled(beta, z);
                }
            }
        }
        let tail = pref * self.series_tail(z);
        if tail > self.config.tail_tol {
            return Err(Error::KernelTruncation {
                achieved: tail,
                tolerance: self.config.tail_tol,
            });
        }
        Ok(KernelValue { value: sum * pref, tail })
    }

    /// Bessel order attached to angular index k.
    pub fn beta(&self, k: usize) -> Result<f64> {
        Ok(exponents(self.spectrum.pair(k)?.mu, self.spectrum.dim())?.1)
    }
}

fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

/// Convenience wrapper around [`HeatKernel::eval`].
pub fn kernel_k(x: &[f64], y: &[f64], spectrum: Arc<AngularSpectrum>, config: KernelConfig) -> Result<C64> {
    Ok(HeatKernel::new(spectrum, config)?.eval(x, y)?.value)
}

/// Angular projections u_k(r) = ∫ u(rθ) conj ψ_k(θ) dθ of a pointwise datum.
/// `powers[k]` is the expected small-r behaviour r^p of the k-th profile and
/// `rate` the Gaussian decay rate, both used only to pick quadrature nodes.
pub struct AngularProjection<P> {
    spectrum: Arc<AngularSpectrum>,
    datum: P,
    units: Vec<[f64; 3]>,
    weights: Vec<f64>,
    /// conj ψ_k at every angular node, per component.
    conj_psi: Vec<Vec<C64>>,
    rate: f64,
}

impl<P: PointField> AngularProjection<P> {
    pub fn new(datum: P, spectrum: Arc<AngularSpectrum>, rate: f64, angular_points: usize) -> Result<Self> {
        let dim = spectrum.dim();
        let (units, weights) = sphere_rule(dim, angular_points)?;
        let mut conj_psi = Vec::with_capacity(spectrum.len());
        for k in 1..=spectrum.len() {
            let mut v = Vec::with_capacity(units.len());
            for u in &units {
                v.push(spectrum.psi(k, &u[..dim])?.conj());
            }
            conj_psi.push(v);
        }
        Ok(AngularProjection {
            spectrum,
            datum,
            units,
            weights,
            conj_psi,
            rate,
        })
    }

    fn samples(&self, r: f64) -> Vec<C64> {
        let dim = self.spectrum.dim();
        let mut x = [0.0; 3];
        self.units
            .iter()
            .zip(&self.weights)
            .map(|(u, &w)| {
                for i in 0..dim {
                    x[i] = r * u[i];
                }
                self.datum.value(&x[..dim]) * w
            })
            .collect()
    }

    fn project(&self, k: usize, samples: &[C64]) -> C64 {
        samples.iter().zip(&self.conj_psi[k - 1]).map(|(a, b)| a * b).sum()
    }

    /// All projections at once.
    pub fn profiles(&self, r: f64) -> Vec<C64> {
        let s = self.samples(r);
        (1..=self.spectrum.len()).map(|k| self.project(k, &s)).collect()
    }

    /// ∫ |u(rθ)|² dθ − Σ_k |u_k(r)|²: angular truncation defect at radius r.
    pub fn defect(&self, r: f64) -> f64 {
        let s = self.samples(r);
        let total: f64 = s.iter().zip(&self.weights).map(|(v, &w)| v.norm_sqr() / w).sum();
        let kept: f64 = (1..=self.spectrum.len()).map(|k| self.project(k, &s).norm_sqr()).sum();
        (total - kept).max(0.0)
    }

    pub fn datum(&self) -> &P {
        &self.datum
    }
}

/// Small-r power of a smooth datum's k-th angular projection.
fn smooth_power(label: ModeLabel) -> f64 {
    match label {
        ModeLabel::Wavenumber(n) => n.unsigned_abs() as f64,
        ModeLabel::Harmonic { degree, .. } => degree as f64,
    }
}

impl<P: PointField> RadialField for AngularProjection<P> {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.spectrum
    }
    fn components(&self) -> Vec<usize> {
        (1..=self.spectrum.len()).collect()
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        let v = self.project(k, &self.samples(r));
        // Central difference; the datum is only known pointwise.
        let d = 1e-5 * r.max(1.0);
        let lo = (r - d).max(r / 2.0);
        let a = self.project(k, &self.samples(lo));
        let b = self.project(k, &self.samples(r + d));
        Profile::new(v, (b - a) / (r + d - lo))
    }
    fn leading_power(&self, k: usize) -> f64 {
        match *self.spectrum.potential() {
            AngularPotential::Fourier { .. } => 0.0,
            _ => smooth_power(self.spectrum.label(k)),
        }
    }
    fn gaussian_rate(&self) -> f64 {
        self.rate
    }
}

/// Coefficients of a datum on the Ũ_{m,k} basis at self-similar time t.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub t: f64,
    pub spectrum: Arc<AngularSpectrum>,
    pub modes: Vec<SpectralMode>,
    pub coeffs: Vec<C64>,
    /// 𝓛̃-norm of the part of the datum not captured by the modes; an upper
    /// bound for the truncation error at every later time.
    pub residual: f64,
}

impl SpectralState {
    pub fn from_coefficients(spectrum: Arc<AngularSpectrum>, modes: Vec<SpectralMode>, coeffs: Vec<C64>) -> Result<Self> {
        if modes.len() != coeffs.len() {
            return Err(Error::invalid("coeffs", "one coefficient per mode required"));
        }
        Ok(SpectralState {
            t: 0.0,
            spectrum,
            modes,
            coeffs,
            residual: 0.0,
        })
    }

    /// Σ |c_{m,k}|² = ‖φ(·, t)‖²_𝓛̃.
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn coefficient(&self, m: usize, k: usize) -> Option<C64> {
        self.modes.iter().position(|x| x.m == m && x.k == k).map(|i| self.coeffs[i])
    }

    /// Decay by (1+s)^{−γ̃}; states compose through (1+T) = (1+t)(1+s).
    pub fn propagate(&self, s: f64) -> Result<SpectralState> {
        if !(s >= 0.0) {
            return Err(Error::invalid("t", "must be nonnegative"));
        }
        let mut out = self.clone();
        let l = libm::log1p(s);
        for (c, m) in out.coeffs.iter_mut().zip(&self.modes) {
            *c *= libm::exp(-m.gamma_tilde * l);
        }
        out.t = (1.0 + self.t) * (1.0 + s) - 1.0;
        Ok(out)
    }

    /// u(x, t) = Σ c (1+t)^{−γ̃} Ũ(x/√(1+t)) with the coefficients of this
    /// state taken as the datum.
    pub fn solution(&self) -> ForwardSolution {
        ForwardSolution { state: self.clone() }
    }

    pub fn check_tail(&self, tol: f64) -> Result<()> {
        if self.residual > tol {
            return Err(Error::SpectralTruncation {
                tail: self.residual,
                tolerance: tol,
            });
        }
        Ok(())
    }
}

/// All modes with m ≤ m_max and k ≤ k_max.
fn modes_up_to(spectrum: &AngularSpectrum, m_max: usize, k_max: usize) -> Result<Vec<SpectralMode>> {
    let mut out = Vec::new();
    for k in 1..=k_max.min(spectrum.len()) {
        for m in 0..=m_max {
            out.push(SpectralMode::new(m, k, spectrum)?);
        }
    }
    Ok(out)
}

/// c_{m,k} = ∫ u₀ conj(Ũ_{m,k}) e^{|x|²/4} dx = ∫ u₀ conj(Ṽ_{m,k}) dx.
/// The datum must decay at a Gaussian rate above 1/8 for ‖u₀‖_𝓛̃ to exist.
pub fn expand_datum<F: RadialField + ?Sized>(
    u0: &F,
    spectrum: Arc<AngularSpectrum>,
    m_max: usize,
    k_max: usize,
    opts: &QuadOptions,
) -> Result<SpectralState> {
    if u0.gaussian_rate() <= 0.125 {
        return Err(Error::invalid("datum", "must decay faster than e^{−|x|²/8}"));
    }
    let modes = modes_up_to(&spectrum, m_max, k_max)?;
    let flat = Weight {
        t: 1.0,
        sigma: 0.0,
        norm_power: 0.0,
    };
    let comps = u0.components();
    let run = |o: &QuadOptions| -> Result<Vec<C64>> {
        modes
            .iter()
            .map(|mode| {
                if !comps.contains(&mode.k) {
                    return Ok(C64::new(0.0, 0.0));
                }
                let single = crate::ou::ModeSum::single(spectrum.clone(), mode.clone());
                let restricted = Restrict { field: u0, k: mode.k };
                modal_inner_power(&restricted, &single, flat, 0.0, o)
            })
            .collect()
    };
    let a = run(opts)?;
    let b = run(&opts.doubled())?;
    let scale = b.iter().map(|c| c.norm()).fold(1e-300, f64::max);
    let disc = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if disc > 1e-8 * scale.max(1.0) {
        return Err(Error::QuadratureNotConverged {
            what: "datum expansion",
            discrepancy: disc,
        });
    }
    let norm = modal_inner(u0, u0, Weight::inverse_gaussian(), &opts.doubled())?.re;
    let kept: f64 = b.iter().map(|c| c.norm_sqr()).sum();
    Ok(SpectralState {
        t: 0.0,
        spectrum,
        modes,
        coeffs: b,
        residual: libm::sqrt((norm - kept).max(0.0)),
    })
}

/// A field restricted to one angular component.
struct Restrict<'a, F: ?Sized> {
    field: &'a F,
    k: usize,
}

impl<F: RadialField + ?Sized> RadialField for Restrict<'_, F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.field.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        alloc::vec![self.k]
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        self.field.profile(k, r)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.field.leading_power(k)
    }
    fn gaussian_rate(&self) -> f64 {
        self.field.gaussian_rate()
    }
}

/// Forward solution of the unperturbed equation from a spectral state.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    state: SpectralState,
}

impl ForwardSolution {
    pub fn state(&self) -> &SpectralState {
        &self.state
    }

    /// u(x, t) and the truncation bound carried by the state.
    pub fn value(&self, x: &[f64], t: f64) -> Result<(C64, f64)> {
        if !(t >= 0.0) {
            return Err(Error::invalid("t", "must be nonnegative"));
        }
        let r = norm(x);
        let spec = &self.state.spectrum;
        if r == 0.0 {
            let mut v = C64::new(0.0, 0.0);
            for (m, c) in self.state.modes.iter().zip(&self.state.coeffs) {
                if *c != C64::new(0.0, 0.0) {
                    let v0 = crate::ou::eval_v(m, spec, x)? / libm::sqrt(m.norm_sq);
                    v += c * libm::pow(1.0 + t, -m.gamma_tilde) * v0;
                }
            }
            return Ok((v, self.state.residual));
        }
        let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
        let mut v = C64::new(0.0, 0.0);
        for k in self.components() {
            v += self.profile(k, r, t).value * spec.psi(k, &unit)?;
        }
        Ok((v, self.state.residual))
    }
}

impl SolutionField for ForwardSolution {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.state.spectrum
    }
    fn components(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self
            .state
            .modes
            .iter()
            .zip(&self.state.coeffs)
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(|(m, _)| m.k)
            .collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
        let sq = libm::sqrt(1.0 + t);
        let rho = r / sq;
        let e = libm::exp(-rho * rho / 4.0);
        let l = libm::log1p(t);
        let mut p = Profile::default();
        for (m, c) in self.state.modes.iter().zip(&self.state.coeffs).filter(|x| x.0.k == k) {
            let (v, d) = m.normalized_radial(rho);
            let f = c * libm::exp(-m.gamma_tilde * l) * e;
            p.value += f * v;
            p.deriv += f * (d - v * rho / 2.0) / sq;
        }
        p
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.state
            .modes
            .iter()
            .filter(|m| m.k == k)
            .map(|m| -m.alpha)
            .fold(f64::INFINITY, f64::min)
    }
    fn gaussian_rate(&self, t: f64) -> f64 {
        1.0 / (4.0 * (1.0 + t))
    }
}

/// Pointwise spectral evaluation Σ c (1+t)^{−γ̃} Ũ(x/√(1+t)).
pub fn evaluate_solution_spectral(state: &SpectralState, x: &[f64], t: f64) -> Result<(C64, f64)> {
    state.solution().value(x, t)
}

/// u(x, t) = t^{−N/2} ∫_{|y| ≤ R} u₀(y) K(y/√t, x/√t) dy by product quadrature.
/// The y-integral is organised per angular mode: the datum is projected on
/// ψ_k at every radial node, after which the angular part of the kernel
/// collapses by orthonormality and only radial Bessel integrals remain.
#[derive(Debug, Clone)]
pub struct KernelSolution {
    spectrum: Arc<AngularSpectrum>,
    comps: Vec<usize>,
    betas: Vec<f64>,
    powers: Vec<f64>,
    nodes: Vec<f64>,
    /// Quadrature weight times ρ^{N−1}.
    weights: Vec<f64>,
    /// Projected datum per component at every node.
    data: Vec<Vec<C64>>,
    tail: f64,
}

impl KernelSolution {
    pub fn new<P: PointField>(u0: &P, kernel: &HeatKernel) -> Result<Self> {
        let cfg = kernel.config;
        let spectrum = kernel.spectrum.clone();
        let dim = spectrum.dim();
        let proj = AngularProjection::new(|x: &[f64]| u0.value(x), spectrum.clone(), 0.0, cfg.angular_points)?;
        let rule = composite_legendre(0.0, cfg.domain_radius, cfg.radial_panels, cfg.panel_order);
        let n = rule.nodes.len();
        let mut data: Vec<Vec<C64>> = alloc::vec![Vec::with_capacity(n); spectrum.len()];
        let mut weights = Vec::with_capacity(n);
        let mut defect = 0.0;
        let mut peak: f64 = 0.0;
        for (&rho, &w) in rule.nodes.iter().zip(&rule.weights) {
            let wr = w * libm::pow(rho, dim as f64 - 1.0);
            weights.push(wr);
            for (k, v) in proj.profiles(rho).into_iter().enumerate() {
                peak = peak.max(v.norm());
                data[k].push(v);
            }
            defect += wr * proj.defect(rho);
        }
        // Boundary check on the sphere of radius R.
        let edge = proj.profiles(cfg.domain_radius).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if edge > cfg.tail_tol * peak.max(1e-300) {
            return Err(Error::DomainTooSmall {
                radius: cfg.domain_radius,
                estimate: edge / peak,
            });
        }
        let mut comps = Vec::new();
        let mut betas = Vec::new();
        let mut powers = Vec::new();
        let mut kept = Vec::new();
        let h = (dim as f64 - 2.0) / 2.0;
        for (i, d) in data.into_iter().enumerate() {
            // Components at roundoff level of the projection carry no information.
            if d.iter().all(|v| v.norm() <= 1e-15 * peak) {
                continue;
            }
            let k = i + 1;
            let beta = kernel.beta(k)?;
            comps.push(k);
            betas.push(beta);
            powers.push(beta - h);
            kept.push(d);
        }
        Ok(KernelSolution {
            spectrum,
            comps,
            betas,
            powers,
            nodes: rule.nodes,
            weights,
            data: kept,
            tail: libm::sqrt(defect),
        })
    }

    /// L²-norm of the datum lost to the angular truncation.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn value(&self, x: &[f64], t: f64) -> Result<(C64, f64)> {
        if !(t > 0.0) {
            return Err(Error::invalid("t", "kernel evaluation needs t > 0"));
        }
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::invalid("x", "kernel evaluation away from the origin"));
        }
        let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
        let mut v = C64::new(0.0, 0.0);
        for &k in &self.comps {
            v += self.profile(k, r, t).value * self.spectrum.psi(k, &unit)?;
        }
        Ok((v, self.tail))
    }
}

impl SolutionField for KernelSolution {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.spectrum
    }
    fn components(&self) -> Vec<usize> {
        self.comps.clone()
    }
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
        let Some(i) = self.comps.iter().position(|&c| c == k) else {
            return Profile::default();
        };
        let beta = self.betas[i];
        let dim = self.spectrum.dim() as f64;
        let h = (dim - 2.0) / 2.0;
        let mut v = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        for ((&rho, &w), &u) in self.nodes.iter().zip(&self.weights).zip(&self.data[i]) {
            let z = r * rho / (2.0 * t);
            let g = libm::exp(-(r - rho) * (r - rho) / (4.0 * t));
            if g < 1e-22 {
                continue;
            }
            let s = bessel_i_scaled(beta, z);
            let s1 = bessel_i_scaled(beta + 1.0, z);
            let base = 0.5 * libm::pow(r * rho / t, -h) * g;
            let f = base * s;
            // d/dr of (r^{−h} e^{−(r−ρ)²/4t} e^{−z} I_β(z)).
            let ds_dz = s1 + (beta / z - 1.0) * s;
            let df = base * (s * (-h / r - (r - rho) / (2.0 * t)) + ds_dz * rho / (2.0 * t));
            v += u * (w * f);
            d += u * (w * df);
        }
        let tn = libm::pow(t, -dim / 2.0);
        Profile::new(v * tn, d * tn)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.comps
            .iter()
            .position(|&c| c == k)
            .map(|i| self.powers[i])
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Snapshot, Weight};
    use crate::ou::ModeSum;
    use core::f64::consts::PI;

    fn free3(l: usize) -> Arc<AngularSpectrum> {
        Arc::new(AngularSpectrum::new(AngularPotential::SphereConstant { dim: 3, a: 0.0 }, l, None).unwrap())
    }

    fn ab(phi: f64, k: usize) -> Arc<AngularSpectrum> {
        Arc::new(AngularSpectrum::new(AngularPotential::AharonovBohm { circulation: phi }, k, None).unwrap())
    }

    fn heat3(x: &[f64], y: &[f64]) -> f64 {
        let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        libm::pow(4.0 * PI, -1.5) * libm::exp(-d / 4.0)
    }

    #[test]
    fn bessel_kernel_examples() {
        assert_eq!(bessel_i_scaled(0.0, 0.0), 1.0);
        let e = libm::exp(-1.0) * libm::sinh(1.0) * libm::sqrt(2.0 / PI);
        assert!((bessel_i_scaled(0.5, 1.0) - e).abs() < 1e-14);
        assert!((bessel_i_scaled(2.0, 1e-8) / 1.25e-17 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn free_kernel_reduces_to_gaussian() {
        let k = HeatKernel::new(free3(40), KernelConfig::default()).unwrap();
        let x = [0.0, 0.0, 1.0];
        let v = k.eval(&x, &x).unwrap().value;
        assert!((v.re - libm::pow(4.0 * PI, -1.5)).abs() < 1e-12);
        assert!((v.re - 0.022_448_4).abs() < 1e-7);
        let y = [0.0, 0.0, -1.0];
        let v = k.eval(&x, &y).unwrap().value;
        assert!((v.re - libm::pow(4.0 * PI, -1.5) * libm::exp(-1.0)).abs() < 1e-8);
        let a = [1.3, -2.0, 0.4];
        let b = [-0.5, 2.2, 3.1];
        assert!((k.eval(&a, &b).unwrap().value.re - heat3(&a, &b)).abs() < 1e-10);
    }

    #[test]
    fn truncation_is_reported() {
        let cfg = KernelConfig { k_max: 3, ..KernelConfig::default() };
        let k = HeatKernel::new(free3(3), cfg).unwrap();
        let e = k.eval(&[5.0, 0.0, 0.0], &[0.0, 5.0, 0.0]).unwrap_err();
        assert!(matches!(e, Error::KernelTruncation { .. }));
    }

    #[test]
    fn ab_kernel_hermitian_and_rotation_invariant() {
        let k = HeatKernel::new(ab(0.3, 30), KernelConfig::default()).unwrap();
        let a = k.eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap().value;
        assert!(a.re > 0.0 && a.im.abs() < 1e-15);
        let x: [f64; 2] = [0.4, 1.1];
        let y: [f64; 2] = [-1.2, 0.3];
        let kxy = k.eval(&x, &y).unwrap().value;
        let kyx = k.eval(&y, &x).unwrap().value;
        assert!((kxy - kyx.conj()).norm() < 1e-15);
        let rot = |p: &[f64], th: f64| [p[0] * th.cos() - p[1] * th.sin(), p[0] * th.sin() + p[1] * th.cos()];
        let r = k.eval(&rot(&x, 0.7), &rot(&y, 0.7)).unwrap().value;
        assert!((r.norm() - kxy.norm()).abs() < 1e-12);
        // The flux makes the kernel differ from the free Gaussian.
        let free = libm::exp(-((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)) / 4.0) / (4.0 * PI);
        assert!((kxy.norm() - free).abs() > 1e-4);
    }

    #[test]
    fn propagate_examples() {
        let s = ab(0.3, 2);
        let modes = modes_up_to(&s, 2, s.len()).unwrap();
        let mut c = alloc::vec![C64::new(0.0, 0.0); modes.len()];
        c[4] = C64::new(1.0, 0.0);
        let st = SpectralState::from_coefficients(s.clone(), modes.clone(), c).unwrap();
        assert_eq!(st.propagate(0.0).unwrap().coeffs, st.coeffs);
        let p = st.propagate(1.0).unwrap();
        assert!((p.coeffs[4].re - libm::pow(2.0, -modes[4].gamma_tilde)).abs() < 1e-15);
        // Composition through (1+T) = (1+t₁)(1+t₂).
        let c: Vec<C64> = (0..modes.len()).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.3)).collect();
        let st = SpectralState::from_coefficients(s, modes, c).unwrap();
        let two = st.propagate(0.5).unwrap().propagate(2.0).unwrap();
        let one = st.propagate(1.5 * 3.0 - 1.0).unwrap();
        for (a, b) in two.coeffs.iter().zip(&one.coeffs) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(two.t, one.t);
        assert!(st.propagate(3.0).unwrap().norm_sqr() <= st.norm_sqr());
    }

    #[test]
    fn expansion_of_modes_is_trivial() {
        let s = ab(0.3, 2);
        let u = |m, k| ModeSum::single(s.clone(), SpectralMode::new(m, k, &s).unwrap()).tilde();
        let st = expand_datum(&u(2, 1), s.clone(), 4, s.len(), &QuadOptions::default()).unwrap();
        for (m, c) in st.modes.iter().zip(&st.coeffs) {
            let e = if (m.m, m.k) == (2, 1) { 1.0 } else { 0.0 };
            assert!((c - e).norm() < 1e-10, "{} {} {c}", m.m, m.k);
        }
        assert!(st.residual < 1e-6);
        let pair = ModeSum::new(
            s.clone(),
            alloc::vec![
                (SpectralMode::new(0, 1, &s).unwrap(), C64::new(1.0, 0.0)),
                (SpectralMode::new(1, 1, &s).unwrap(), C64::new(1.0, 0.0)),
            ],
        )
        .tilde();
        let st = expand_datum(&pair, s.clone(), 3, s.len(), &QuadOptions::default()).unwrap();
        assert!((st.coefficient(0, 1).unwrap() - 1.0).norm() < 1e-10);
        assert!((st.coefficient(1, 1).unwrap() - 1.0).norm() < 1e-10);
        assert!(st.coefficient(2, 1).unwrap().norm() < 1e-10);
    }

    struct RadialGauss(Arc<AngularSpectrum>);

    impl RadialField for RadialGauss {
        fn spectrum(&self) -> &AngularSpectrum {
            &self.0
        }
        fn components(&self) -> Vec<usize> {
            alloc::vec![1]
        }
        fn profile(&self, _k: usize, r: f64) -> Profile {
            // e^{−r²/2} = √(4π) e^{−r²/2} · Y₀₀.
            let v = libm::sqrt(4.0 * PI) * libm::exp(-r * r / 2.0);
            Profile::new(C64::new(v, 0.0), C64::new(-r * v, 0.0))
        }
        fn leading_power(&self, _k: usize) -> f64 {
            0.0
        }
        fn gaussian_rate(&self) -> f64 {
            0.5
        }
    }

    #[test]
    fn gaussian_expansion_matches_laguerre_generating_function() {
        let s = free3(1);
        let st = expand_datum(&RadialGauss(s.clone()), s.clone(), 30, 1, &QuadOptions::default()).unwrap();
        for (m, c) in st.modes.iter().zip(&st.coeffs) {
            // ∫₀^∞ s^{1/2} e^{−2s} L_m^{1/2}(s) ds = Γ(m+3/2)/m! · 2^{−m−3/2}.
            let mm = m.m as f64;
            let lag = libm::exp(ln_gamma(mm + 1.5) - ln_gamma(mm + 1.0)) * libm::pow(2.0, -mm - 1.5);
            let e = libm::sqrt(4.0 * PI) * 4.0 * lag / crate::special::binomial(mm + 0.5, m.m) / libm::sqrt(m.norm_sq);
            assert!((c.re - e).abs() < 1e-8, "m={} {} {}", m.m, c.re, e);
        }
        assert!(st.residual < 1e-6);
        // Spectral evolution of the Gaussian is the Gaussian heat flow.
        let sol = st.solution();
        for &(x, t) in &[([0.3, 0.0, 0.1], 0.5), ([1.0, -1.0, 2.0], 2.0), ([0.0, 0.0, 0.0], 1.0)] {
            let (v, _) = sol.value(&x, t).unwrap();
            let r2: f64 = x.iter().map(|a| a * a).sum();
            let e = libm::pow(1.0 + 2.0 * t, -1.5) * libm::exp(-r2 / (2.0 * (1.0 + 2.0 * t)));
            assert!((v.re - e).abs() < 1e-8);
        }
    }

    #[test]
    fn delta_state_is_fundamental_solution() {
        let s = free3(1);
        let modes = modes_up_to(&s, 1, 1).unwrap();
        let st = SpectralState::from_coefficients(s, modes, alloc::vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let sol = st.solution();
        let c = sol.value(&[0.2, 0.0, 0.0], 0.0).unwrap().0.re / libm::exp(-0.01);
        for &(r, t) in &[(0.5, 0.3), (2.0, 1.0), (4.0, 5.0)] {
            let (v, _) = sol.value(&[0.0, r, 0.0], t).unwrap();
            let e = c * libm::pow(1.0 + t, -1.5) * libm::exp(-r * r / (4.0 * (1.0 + t)));
            assert!((v.re - e).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_solution_matches_gaussian_heat_flow() {
        let cfg = KernelConfig { k_max: 12, ..KernelConfig::default() };
        let kernel = HeatKernel::new(free3(12), cfg).unwrap();
        let u0 = |x: &[f64]| C64::new(libm::exp(-x.iter().map(|a| a * a).sum::<f64>() / 2.0), 0.0);
        let sol = KernelSolution::new(&u0, &kernel).unwrap();
        for &(x, t) in &[([0.3, 0.0, 0.1], 0.5), ([1.0, -1.0, 2.0], 2.0)] {
            let (v, _) = sol.value(&x, t).unwrap();
            let r2: f64 = x.iter().map(|a| a * a).sum();
            let e = libm::pow(1.0 + 2.0 * t, -1.5) * libm::exp(-r2 / (2.0 * (1.0 + 2.0 * t)));
            assert!((v.re - e).abs() < 1e-8, "{} {}", v.re, e);
        }
    }

    #[test]
    fn kernel_and_spectral_agree_for_ab_eigen_datum() {
        let s = ab(0.3, 8);
        let kernel = HeatKernel::new(s.clone(), KernelConfig::default()).unwrap();
        let k = s.find(ModeLabel::Wavenumber(1)).unwrap();
        let mode = SpectralMode::new(0, k, &s).unwrap();
        let u = ModeSum::single(s.clone(), mode).tilde();
        let u0 = |x: &[f64]| crate::field::point_value(&u, x).unwrap_or_default();
        let ksol = KernelSolution::new(&u0, &kernel).unwrap();
        let st = expand_datum(&u, s.clone(), 2, s.len(), &QuadOptions::default()).unwrap();
        let ssol = st.solution();
        let opts = QuadOptions::default();
        for &t in &[0.25, 1.0] {
            let a = Snapshot::new(&ksol, t);
            let b = Snapshot::new(&ssol, t);
            let w = Weight::gaussian(2, 1.0);
            let diff = crate::field::Combination::new(alloc::vec![
                (C64::new(1.0, 0.0), &a as &dyn RadialField),
                (C64::new(-1.0, 0.0), &b as &dyn RadialField),
            ]);
            let e = crate::field::weighted_l2(&diff, w, &opts).unwrap();
            let n = crate::field::weighted_l2(&b, w, &opts).unwrap();
            assert!(libm::sqrt(e / n) < 1e-6, "t={t} rel={}", libm::sqrt(e / n));
        }
    }
}
