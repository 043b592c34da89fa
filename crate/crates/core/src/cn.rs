//! Crank–Nicolson oracle for the forward equation, one radial problem per
//! angular mode:
//!   u_t = u_rr + (N−1)/r u_r − μ_k/r² u + h(r) u,  r ∈ [r_min, r_max],
//! homogeneous Dirichlet data at both ends.
//!
//! The grid is uniform in ξ with r = L·ln(1 + e^ξ): geometric near the origin,
//! where profiles behave like r^{β−(N−2)/2} and need resolution on every
//! scale, and uniform with spacing ≈ LΔξ away from it.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::angular::{AngularSpectrum, ModeLabel};
use crate::field::{modal_inner, weighted_l2, Combination, Profile, QuadOptions, RadialField, Snapshot, SolutionField, Weight};
use crate::kernel::expand_datum;
use crate::ou::{exponents, ModeSum, SpectralMode};
use crate::problem::{ProblemSpec, StaticPerturbation};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub scale: f64,
    pub xi0: f64,
    pub dxi: f64,
    pub r: Vec<f64>,
    /// dr/dξ
    pub dr: Vec<f64>,
    /// d²r/dξ²
    pub d2r: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn inverse_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y + libm::log(-libm::expm1(-y))
    } else {
        libm::log(libm::expm1(y))
    }
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n_points: usize, scale: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::invalid("grid", "need 0 < r_min < r_max"));
        }
        if n_points < 8 {
            return Err(Error::invalid("grid", "too few points"));
        }
        if !(scale > 0.0) {
            return Err(Error::invalid("grid", "scale must be positive"));
        }
        let a = inverse_softplus(r_min / scale);
        let b = inverse_softplus(r_max / scale);
        let dxi = (b - a) / (n_points - 1) as f64;
        let mut r = Vec::with_capacity(n_points);
        let mut dr = Vec::with_capacity(n_points);
        let mut d2r = Vec::with_capacity(n_points);
        for i in 0..n_points {
            let x = a + i as f64 * dxi;
            let s = sigmoid(x);
            r.push(scale * softplus(x));
            dr.push(scale * s);
            d2r.push(scale * s * (1.0 - s));
        }
        r[0] = r_min;
        r[n_points - 1] = r_max;
        Ok(RadialGrid {
            scale,
            xi0: a,
            dxi,
            r,
            dr,
            d2r,
        })
    }

    /// Grid with ξ-spacing `dxi` (capped so neighbouring spacings differ by at
    /// most 20%).
    pub fn with_spacing(r_min: f64, r_max: f64, dxi: f64, scale: f64) -> Result<Self> {
        let dxi = dxi.min(0.18);
        let a = inverse_softplus(r_min / scale);
        let b = inverse_softplus(r_max / scale);
        let n = libm::ceil((b - a) / dxi) as usize + 1;
        Self::new(r_min, r_max, n, scale)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// Largest ratio of consecutive spacings.
    pub fn max_ratio(&self) -> f64 {
        self.r
            .windows(3)
            .map(|w| {
                let a = w[1] - w[0];
                let b = w[2] - w[1];
                if a > b {
                    a / b
                } else {
                    b / a
                }
            })
            .fold(1.0, f64::max)
    }

    fn xi_of(&self, r: f64) -> f64 {
        inverse_softplus(r / self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnOptions {
    pub dt: f64,
    /// Target spacing far from the origin.
    pub dr_far: f64,
    pub scale: f64,
    /// Dirichlet data at r_min perturbs a mode by about r_min^{2β}; r_min is
    /// chosen so this stays below `boundary_tol`.
    pub boundary_tol: f64,
    /// Overrides the default 12√(t_final + 1).
    pub r_max: Option<f64>,
    /// Implicit Euler half steps replacing the first CN step.
    pub rannacher_steps: usize,
    /// A snapshot is kept every this many steps (and at every requested time).
    pub save_every: usize,
}

impl Default for CnOptions {
    fn default() -> Self {
        CnOptions {
            dt: 1e-3,
            dr_far: 0.02,
            scale: 0.5,
            boundary_tol: 1e-7,
            r_max: None,
            rannacher_steps: 4,
            save_every: 10,
        }
    }
}

/// r_min = min(10⁻³ r_max, tol^{1/(2β)}) with a floor at 10⁻¹⁴.
pub fn default_r_min(beta_min: f64, r_max: f64, tol: f64) -> f64 {
    let by_beta = if beta_min > 0.0 { libm::pow(tol, 1.0 / (2.0 * beta_min)) } else { 0.0 };
    (1e-3 * r_max).min(by_beta).max(1e-14)
}

pub fn default_r_max(t_final: f64) -> f64 {
    12.0 * libm::sqrt(t_final + 1.0)
}

/// β₁ below this is flagged as a low-confidence configuration.
pub const LOW_CONFIDENCE_BETA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeEvolution {
    pub k: usize,
    pub label: ModeLabel,
    pub mu: f64,
    pub beta: f64,
    pub dt: f64,
    pub grid: Arc<RadialGrid>,
    /// (t, values on the grid), increasing in t.
    pub snapshots: Vec<(f64, Vec<C64>)>,
}

impl ModeEvolution {
    pub fn new(k: usize, spectrum: &AngularSpectrum, grid: Arc<RadialGrid>, initial: Vec<C64>, dt: f64) -> Result<Self> {
        if initial.len() != grid.len() {
            return Err(Error::invalid("initial", "one value per grid point"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let pair = spectrum.pair(k)?;
        let (_, beta) = exponents(pair.mu, spectrum.dim())?;
        let mut initial = initial;
        let n = initial.len();
        initial[0] = C64::new(0.0, 0.0);
        initial[n - 1] = C64::new(0.0, 0.0);
        Ok(ModeEvolution {
            k,
            label: pair.label,
            mu: pair.mu,
            beta,
            dt,
            grid,
            snapshots: vec![(0.0, initial)],
        })
    }

    pub fn last(&self) -> &(f64, Vec<C64>) {
        self.snapshots.last().expect("at least the datum")
    }

    pub fn at(&self, t: f64) -> Option<&[C64]> {
        self.snapshots
            .iter()
            .find(|s| (s.0 - t).abs() <= 1e-9 * self.dt)
            .map(|s| s.1.as_slice())
    }
}

/// Tridiagonal coefficients of the spatial operator at interior nodes:
/// (Au)_i = lo_i u_{i−1} + di_i u_i + up_i u_{i+1}.
struct Operator {
    lo: Vec<f64>,
    di: Vec<f64>,
    up: Vec<f64>,
}

fn operator(grid: &RadialGrid, dim: usize, mu: f64, h: Option<&StaticPerturbation>) -> Operator {
    let n = grid.len();
    let hx = grid.dxi;
    let mut lo = vec![0.0; n];
    let mut di = vec![0.0; n];
    let mut up = vec![0.0; n];
    for i in 1..n - 1 {
        let r = grid.r[i];
        let rp = grid.dr[i];
        let a = 1.0 / (rp * rp);
        let b = -grid.d2r[i] / (rp * rp * rp) + (dim as f64 - 1.0) / (r * rp);
        let c = -mu / (r * r) + h.map_or(0.0, |h| h.eval(r));
        lo[i] = a / (hx * hx) - b / (2.0 * hx);
        up[i] = a / (hx * hx) + b / (2.0 * hx);
        di[i] = -2.0 * a / (hx * hx) + c;
    }
    Operator { lo, di, up }
}

/// Solves (I − θΔt A) x = rhs on interior nodes with zero boundary values.
fn solve(op: &Operator, theta_dt: f64, rhs: &[C64], out: &mut [C64], scratch: &mut Vec<f64>) -> Result<()> {
    let n = rhs.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut d: Vec<C64> = vec![C64::new(0.0, 0.0); n];
    // Forward elimination.
    let mut prev_c = 0.0;
    let mut prev_d = C64::new(0.0, 0.0);
    for i in 1..n - 1 {
        let a = -theta_dt * op.lo[i];
        let b = 1.0 - theta_dt * op.di[i];
        let c = -theta_dt * op.up[i];
        let denom = b - a * prev_c;
        if !(denom.abs() > 1e-300) || !denom.is_finite() {
            return Err(Error::Numerical("tridiagonal solve broke down".into()));
        }
        let cc = if i + 1 < n - 1 { c / denom } else { 0.0 };
        let dd = (rhs[i] - prev_d * a) / denom;
        scratch[i] = cc;
        d[i] = dd;
        prev_c = cc;
        prev_d = dd;
    }
    out[n - 1] = C64::new(0.0, 0.0);
    out[0] = C64::new(0.0, 0.0);
    let mut next = C64::new(0.0, 0.0);
    for i in (1..n - 1).rev() {
        let v = d[i] - next * scratch[i];
        out[i] = v;
        next = v;
    }
    Ok(())
}

fn apply(op: &Operator, theta_dt: f64, u: &[C64], out: &mut [C64]) {
    let n = u.len();
    out[0] = C64::new(0.0, 0.0);
    out[n - 1] = C64::new(0.0, 0.0);
    for i in 1..n - 1 {
        out[i] = u[i] + (u[i - 1] * op.lo[i] + u[i] * op.di[i] + u[i + 1] * op.up[i]) * theta_dt;
    }
}

/// Advances `n_steps` CN steps from the last snapshot, recording a snapshot
/// every `save_every` steps and at the end. When the evolution starts from
/// t = 0 the first step is replaced by `rannacher` implicit Euler substeps.
pub fn step_cn(
    mode: &mut ModeEvolution,
    n_steps: usize,
    dim: usize,
    h: Option<&StaticPerturbation>,
    rannacher: usize,
    save_every: usize,
) -> Result<()> {
    let op = operator(&mode.grid, dim, mode.mu, h);
    let (t0, u0) = mode.last().clone();
    let mut u = u0;
    let mut t = t0;
    let mut rhs = vec![C64::new(0.0, 0.0); u.len()];
    let mut next = vec![C64::new(0.0, 0.0); u.len()];
    let mut scratch = Vec::new();
    let dt = mode.dt;
    for step in 0..n_steps {
        if step == 0 && t0 == 0.0 && rannacher > 0 {
            let sub = dt / rannacher as f64;
            for _ in 0..rannacher {
                solve(&op, sub, &u, &mut next, &mut scratch)?;
                core::mem::swap(&mut u, &mut next);
            }
        } else {
            apply(&op, dt / 2.0, &u, &mut rhs);
            solve(&op, dt / 2.0, &rhs, &mut next, &mut scratch)?;
            core::mem::swap(&mut u, &mut next);
        }
        t = t0 + (step + 1) as f64 * dt;
        if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical(alloc::format!("non-finite value at t = {t}")));
        }
        if (step + 1) % save_every.max(1) == 0 && step + 1 != n_steps {
            mode.snapshots.push((t, u.clone()));
        }
    }
    if n_steps > 0 {
        mode.snapshots.push((t, u));
    }
    Ok(())
}

/// Samples every component of a modal datum on the grid.
pub fn reduce_to_modes<F: RadialField + ?Sized>(u0: &F, grid: &RadialGrid) -> Vec<(usize, Vec<C64>)> {
    u0.components()
        .into_iter()
        .map(|k| (k, grid.r.iter().map(|&r| u0.profile(k, r).value).collect()))
        .collect()
}

/// Per-mode CN evolution of a modal datum up to `t_final`, with snapshots at
/// every multiple of `save_every` steps and at each time in `times`.
#[derive(Debug, Clone)]
pub struct CnSolver {
    pub spectrum: Arc<AngularSpectrum>,
    pub grid: Arc<RadialGrid>,
    pub options: CnOptions,
    pub perturbation: Option<StaticPerturbation>,
    pub low_confidence: bool,
}

impl CnSolver {
    pub fn new(problem: &ProblemSpec, spectrum: Arc<AngularSpectrum>, t_final: f64, options: CnOptions) -> Result<Self> {
        if &problem.potential != spectrum.potential() {
            return Err(Error::ConfigMismatch("spectrum and problem use different potentials".into()));
        }
        spectrum.require_hardy()?;
        let beta1 = spectrum.beta1();
        let r_max = options.r_max.unwrap_or_else(|| default_r_max(t_final));
        let r_min = default_r_min(beta1, r_max, options.boundary_tol);
        let dxi = options.dr_far / options.scale;
        let grid = Arc::new(RadialGrid::with_spacing(r_min, r_max, dxi, options.scale)?);
        Ok(CnSolver {
            spectrum,
            grid,
            options,
            perturbation: problem.perturbation,
            low_confidence: beta1 < LOW_CONFIDENCE_BETA,
        })
    }

    pub fn with_grid(mut self, grid: RadialGrid) -> Self {
        self.grid = Arc::new(grid);
        self
    }

    /// Evolves every component of `u0`; `times` must be multiples of dt.
    pub fn evolve<F: RadialField + ?Sized>(&self, u0: &F, times: &[f64]) -> Result<GridField> {
        let dt = self.options.dt;
        let mut marks: Vec<usize> = times
            .iter()
            .map(|&t| {
                let n = libm::round(t / dt);
                if (n * dt - t).abs() > 1e-9 * dt.max(t) || n < 0.0 {
                    Err(Error::invalid("times", "must be nonnegative multiples of dt"))
                } else {
                    Ok(n as usize)
                }
            })
            .collect::<Result<_>>()?;
        marks.sort_unstable();
        marks.dedup();
        let dim = self.spectrum.dim();
        let h = self.perturbation.as_ref().filter(|h| !h.is_zero());
        let mut modes = Vec::new();
        for (k, data) in reduce_to_modes(u0, &self.grid) {
            let mut m = ModeEvolution::new(k, &self.spectrum, self.grid.clone(), data, dt)?;
            let mut done = 0;
            for &mark in &marks {
                if mark > done {
                    step_cn(&mut m, mark - done, dim, h, self.options.rannacher_steps, self.options.save_every)?;
                    done = mark;
                }
            }
            modes.push(m);
        }
        Ok(GridField::new(self.spectrum.clone(), modes))
    }
}

/// Solution field backed by per-mode grid snapshots. Values between nodes
/// come from cubic Lagrange interpolation in ξ and in t; radial derivatives
/// from fourth-order differences in ξ.
#[derive(Debug, Clone)]
pub struct GridField {
    spectrum: Arc<AngularSpectrum>,
    modes: Vec<ModeEvolution>,
    rate: f64,
}

impl GridField {
    pub fn new(spectrum: Arc<AngularSpectrum>, modes: Vec<ModeEvolution>) -> Self {
        GridField {
            spectrum,
            modes,
            rate: 0.0,
        }
    }

    /// Gaussian decay rate hint for quadrature node placement.
    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn modes(&self) -> &[ModeEvolution] {
        &self.modes
    }

    fn mode(&self, k: usize) -> Option<&ModeEvolution> {
        self.modes.iter().find(|m| m.k == k)
    }
}

fn lagrange4(x: [f64; 4], y: [C64; 4], at: f64) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (at - x[j]) / (x[i] - x[j]);
            }
        }
        s += y[i] * w;
    }
    s
}

fn stencil(i: usize, n: usize) -> usize {
    i.saturating_sub(1).min(n - 4)
}

fn d_xi(u: &[C64], i: usize, h: f64) -> C64 {
    let n = u.len();
    if i >= 2 && i + 2 < n {
        (u[i - 2] - u[i - 1] * 8.0 + u[i + 1] * 8.0 - u[i + 2]) / (12.0 * h)
    } else if i == 0 {
        (u[0] * -3.0 + u[1] * 4.0 - u[2]) / (2.0 * h)
    } else if i + 1 == n {
        (u[n - 3] - u[n - 2] * 4.0 + u[n - 1] * 3.0) / (2.0 * h)
    } else {
        (u[i + 1] - u[i - 1]) / (2.0 * h)
    }
}

fn spatial(m: &ModeEvolution, u: &[C64], r: f64) -> Profile {
    let g = &m.grid;
    if r < g.r_min() || r > g.r_max() {
        return Profile::default();
    }
    let x = g.xi_of(r);
    let n = g.len();
    let j = (((x - g.xi0) / g.dxi) as usize).min(n - 2);
    let s = stencil(j, n);
    let xs = [0, 1, 2, 3].map(|q| g.xi0 + (s + q) as f64 * g.dxi);
    let v = lagrange4(xs, [0, 1, 2, 3].map(|q| u[s + q]), x);
    let d = lagrange4(xs, [0, 1, 2, 3].map(|q| d_xi(u, s + q, g.dxi)), x);
    let rp = g.scale * sigmoid(x);
    Profile::new(v, d / rp)
}

impl SolutionField for GridField {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.spectrum
    }
    fn components(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.k).collect()
    }
    fn profile(&self, k: usize, r: f64, t: f64) -> Profile {
        let Some(m) = self.mode(k) else {
            return Profile::default();
        };
        if let Some(u) = m.at(t) {
            return spatial(m, u, r);
        }
        let snaps = &m.snapshots;
        let n = snaps.len();
        if n < 4 || t < snaps[0].0 || t > snaps[n - 1].0 {
            return Profile::default();
        }
        let j = snaps.partition_point(|s| s.0 <= t).saturating_sub(1);
        let s = stencil(j, n);
        let ts = [0, 1, 2, 3].map(|q| snaps[s + q].0);
        let ps = [0, 1, 2, 3].map(|q| spatial(m, &snaps[s + q].1, r));
        Profile::new(
            lagrange4(ts, ps.map(|p| p.value), t),
            lagrange4(ts, ps.map(|p| p.deriv), t),
        )
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.mode(k).map_or(0.0, |m| m.beta - (self.spectrum.dim() as f64 - 2.0) / 2.0)
    }
    fn gaussian_rate(&self, _t: f64) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckReport {
    pub times: Vec<f64>,
    /// ‖u_CN − u_spec‖_𝓛 / ‖u_spec‖_𝓛 at each time.
    pub rel_errors: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub low_confidence: bool,
}

/// Relative 𝓛 = L²(G(·,1)) distance between two snapshots.
pub fn relative_distance<A, B>(a: &A, b: &B, t: f64, opts: &QuadOptions) -> Result<f64>
where
    A: SolutionField + ?Sized,
    B: SolutionField + ?Sized,
{
    let dim = b.spectrum().dim();
    let w = Weight::gaussian(dim, 1.0);
    let sa = Snapshot::new(a, t);
    let sb = Snapshot::new(b, t);
    let diff = Combination::new(vec![
        (C64::new(1.0, 0.0), &sa as &dyn RadialField),
        (C64::new(-1.0, 0.0), &sb as &dyn RadialField),
    ]);
    let d = weighted_l2(&diff, w, opts)?;
    let bb = weighted_l2(&sb, w, opts)?;
    Ok(libm::sqrt(d / bb))
}

/// Evolves `u0` both ways (spectral coefficients and CN) and compares.
#[allow(clippy::too_many_arguments)]
pub fn compare_with_spectral<F: RadialField + ?Sized>(
    problem: &ProblemSpec,
    spectrum: Arc<AngularSpectrum>,
    u0: &F,
    times: &[f64],
    m_max: usize,
    tolerance: f64,
    options: CnOptions,
    quad: &QuadOptions,
) -> Result<CrosscheckReport> {
    if !problem.is_unperturbed() {
        return Err(Error::ConfigMismatch("the spectral propagator needs h ≡ 0".into()));
    }
    let t_final = times.iter().copied().fold(0.0, f64::max);
    let solver = CnSolver::new(problem, spectrum.clone(), t_final, options)?;
    let cn = solver.evolve(u0, times)?;
    let state = expand_datum(u0, spectrum.clone(), m_max, spectrum.len(), quad)?;
    let spec = state.solution();
    let rel_errors: Vec<f64> = times
        .iter()
        .map(|&t| relative_distance(&cn, &spec, t, quad))
        .collect::<Result<_>>()?;
    let pass = rel_errors.iter().all(|&e| e <= tolerance);
    Ok(CrosscheckReport {
        times: times.to_vec(),
        rel_errors,
        tolerance,
        pass,
        low_confidence: solver.low_confidence,
    })
}

/// φ(y, t) = u(√(1+t) y, t): the self-similar view in which eigen-data decay
/// coefficient-wise.
pub struct SelfSimilarView<F> {
    pub field: F,
    pub t: f64,
}

impl<F: SolutionField> RadialField for SelfSimilarView<F> {
    fn spectrum(&self) -> &AngularSpectrum {
        self.field.spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.field.components()
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        let s = libm::sqrt(1.0 + self.t);
        let p = self.field.profile(k, s * r, self.t);
        Profile::new(p.value, p.deriv * s)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.field.leading_power(k)
    }
    fn gaussian_rate(&self) -> f64 {
        0.25
    }
}

/// ⟨φ(·, t), Ũ_{m,k}⟩_𝓛̃ at each time.
pub fn coefficient_trace<F: SolutionField + ?Sized>(
    field: &F,
    mode: &SpectralMode,
    times: &[f64],
    opts: &QuadOptions,
) -> Result<Vec<C64>> {
    let spec = field.spectrum();
    let v = ModeSum::single(spec, mode.clone());
    let flat = Weight {
        t: 1.0,
        sigma: 0.0,
        norm_power: 0.0,
    };
    times
        .iter()
        .map(|&t| {
            let view = SelfSimilarView { field, t };
            modal_inner(&view, &v, flat, opts)
        })
        .collect()
}

/// Least-squares slope of −ln|c(t)| against ln(1+t).
pub fn fit_decay_exponent(times: &[f64], coeffs: &[C64]) -> Result<f64> {
    if times.len() < 2 || times.len() != coeffs.len() {
        return Err(Error::invalid("times", "need at least two matching samples"));
    }
    let xs: Vec<f64> = times.iter().map(|&t| libm::log1p(t)).collect();
    let ys: Vec<f64> = coeffs.iter().map(|c| -libm::log(c.norm())).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::FitNotConverged("vanishing coefficient".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::AngularPotential;
    use core::f64::consts::PI;

    fn free3() -> (ProblemSpec, Arc<AngularSpectrum>) {
        let p = AngularPotential::SphereConstant { dim: 3, a: 0.0 };
        (ProblemSpec::free(p.clone()), Arc::new(AngularSpectrum::new(p, 1, None).unwrap()))
    }

    fn ab(phi: f64, k: usize) -> (ProblemSpec, Arc<AngularSpectrum>) {
        let p = AngularPotential::AharonovBohm { circulation: phi };
        (ProblemSpec::free(p.clone()), Arc::new(AngularSpectrum::new(p, k, None).unwrap()))
    }

    struct Gauss3(Arc<AngularSpectrum>, f64);

    impl RadialField for Gauss3 {
        fn spectrum(&self) -> &AngularSpectrum {
            &self.0
        }
        fn components(&self) -> Vec<usize> {
            vec![1]
        }
        fn profile(&self, _k: usize, r: f64) -> Profile {
            let v = self.1 * libm::sqrt(4.0 * PI) * libm::exp(-r * r / 2.0);
            Profile::new(C64::new(v, 0.0), C64::new(-r * v, 0.0))
        }
        fn leading_power(&self, _k: usize) -> f64 {
            0.0
        }
        fn gaussian_rate(&self) -> f64 {
            0.5
        }
    }

    fn gauss_error(dt: f64, dr: f64) -> f64 {
        gauss_error_with(dt, dr, CnOptions::default().boundary_tol)
    }

    fn gauss_error_with(dt: f64, dr: f64, boundary_tol: f64) -> f64 {
        let (p, s) = free3();
        let opts = CnOptions { dt, dr_far: dr, boundary_tol, save_every: 1000, ..CnOptions::default() };
        let solver = CnSolver::new(&p, s.clone(), 0.5, opts).unwrap();
        let g = solver.evolve(&Gauss3(s, 1.0), &[0.5]).unwrap();
        let c: f64 = 2.0;
        let mut err: f64 = 0.0;
        for i in 1..60 {
            let r = i as f64 * 0.1;
            let e = libm::sqrt(4.0 * PI) * libm::pow(c, -1.5) * libm::exp(-r * r / (2.0 * c));
            err = err.max((g.profile(1, r, 0.5).value.re - e).abs());
        }
        err
    }

    #[test]
    fn grid_is_geometric_then_uniform() {
        let g = RadialGrid::with_spacing(1e-10, 20.0, 0.04, 0.5).unwrap();
        assert!(g.max_ratio() <= 1.2);
        assert_eq!(g.r_min(), 1e-10);
        assert_eq!(g.r_max(), 20.0);
        let far = g.r[g.len() - 1] - g.r[g.len() - 2];
        assert!((far - 0.02).abs() < 1e-3);
        assert!(g.r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn r_min_policy() {
        assert_eq!(default_r_min(0.5, 12.0, 1e-7), 1e-7);
        assert_eq!(default_r_min(3.0, 12.0, 1e-7), 12e-3);
        assert_eq!(default_r_min(0.01, 12.0, 1e-7), 1e-14);
    }

    #[test]
    fn zero_datum_stays_zero() {
        let (p, s) = free3();
        let solver = CnSolver::new(&p, s.clone(), 0.1, CnOptions::default()).unwrap();
        let g = solver.evolve(&Gauss3(s, 0.0), &[0.1]).unwrap();
        assert!(g.modes()[0].last().1.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn gaussian_spreading_matches_closed_form() {
        let e = gauss_error_with(2.5e-4, 0.002, 1e-10);
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn second_order_in_time_and_space() {
        // Time: spatial error made negligible by a fine grid.
        let a = gauss_error(0.02, 0.005);
        let b = gauss_error(0.01, 0.005);
        let ratio_t = a / b;
        assert!((ratio_t - 4.0).abs() < 0.4 * 2.0, "time ratio {ratio_t}");
        let a = gauss_error(1e-4, 0.08);
        let b = gauss_error(1e-4, 0.04);
        let ratio_r = a / b;
        assert!((ratio_r - 4.0).abs() < 0.4 * 2.0, "space ratio {ratio_r}");
    }

    #[test]
    fn ab_eigen_datum_matches_spectral_decay() {
        let (p, s) = ab(0.3, 2);
        let k = s.find(ModeLabel::Wavenumber(0)).unwrap();
        let mode = SpectralMode::new(0, k, &s).unwrap();
        let u0 = ModeSum::single(s.clone(), mode.clone()).tilde();
        let quad = QuadOptions::default();
        let r = compare_with_spectral(&p, s.clone(), &u0, &[0.5], 2, 1e-3, CnOptions::default(), &quad).unwrap();
        assert!(r.pass, "{:?}", r.rel_errors);
        assert!(!r.low_confidence);
        let u5 = ModeSum::new(s.clone(), vec![(mode, C64::new(5.0, 0.0))]).tilde();
        let r5 = compare_with_spectral(&p, s.clone(), &u5, &[0.5], 2, 1e-3, CnOptions::default(), &quad).unwrap();
        assert!((r5.rel_errors[0] - r.rel_errors[0]).abs() < 1e-12, "{:?} {:?}", r.rel_errors, r5.rel_errors);
    }

    #[test]
    fn real_data_stay_real_and_exponent_fits() {
        let (p, s) = ab(0.3, 2);
        let k = s.find(ModeLabel::Wavenumber(1)).unwrap();
        let mode = SpectralMode::new(1, k, &s).unwrap();
        let u0 = ModeSum::single(s.clone(), mode.clone()).tilde();
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let solver = CnSolver::new(&p, s.clone(), 1.0, CnOptions::default()).unwrap();
        let g = solver.evolve(&u0, &times).unwrap();
        assert!(g.modes()[0].last().1.iter().all(|v| v.im == 0.0));
        let c = coefficient_trace(&g, &mode, &times, &QuadOptions::default()).unwrap();
        let e = fit_decay_exponent(&times, &c).unwrap();
        assert!((e - mode.gamma_tilde).abs() < 1e-2, "{e} vs {}", mode.gamma_tilde);
    }

    #[test]
    fn perturbed_problem_is_refused_by_crosscheck() {
        let p = AngularPotential::AharonovBohm { circulation: 0.3 };
        let s = Arc::new(AngularSpectrum::new(p.clone(), 1, None).unwrap());
        let prob = ProblemSpec::new(p, Some(StaticPerturbation::new(1.0, 0.0, 1.0).unwrap()), 1.0).unwrap();
        let u0 = ModeSum::single(s.clone(), SpectralMode::new(0, 1, &s).unwrap()).tilde();
        let r = compare_with_spectral(&prob, s, &u0, &[0.1], 1, 1e-3, CnOptions::default(), &QuadOptions::default());
        assert!(matches!(r, Err(Error::ConfigMismatch(_))));
    }
}
