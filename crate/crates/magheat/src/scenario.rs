//! Scenario files: JSON description of a problem, a datum and the tasks to
//! run on it.

use std::sync::Arc;

use magheat_core::angular::{AngularPotential, AngularSpectrum, FourierSeries};
use magheat_core::cn::CnOptions;
use magheat_core::field::QuadOptions;
use magheat_core::problem::{ProblemSpec, StaticPerturbation};
use magheat_core::C64;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub problem: Problem,
    #[serde(default)]
    pub datum: Option<DatumSpec>,
    #[serde(default)]
    pub truncation: Truncation,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Default output directory, relative to the working directory.
    #[serde(default)]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub dimension: usize,
    pub potential: Potential,
    #[serde(default)]
    pub h: Option<Perturbation>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_horizon() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    AharonovBohm {
        circulation: f64,
    },
    /// Fourier coefficients as [n, re, im] triples.
    Fourier {
        #[serde(default)]
        a: Vec<(i64, f64, f64)>,
        #[serde(default)]
        tangential: Vec<(i64, f64, f64)>,
    },
    SphereConstant {
        a: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    /// Ũ_{m,k}, the datum whose evolution is a single decaying mode.
    Eigenmode {
        m: usize,
        k: usize,
        #[serde(default = "unit")]
        amplitude: (f64, f64),
    },
    /// exp(−|x − center|²/(2 width²)).
    Gaussian {
        center: Vec<f64>,
        width: f64,
    },
    /// Radial profile on angular component k, cubic between samples and zero
    /// beyond the last radius.
    Table {
        k: usize,
        r: Vec<f64>,
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

fn unit() -> (f64, f64) {
    (1.0, 0.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Truncation {
    pub m_max: usize,
    pub k_max: usize,
    pub n_basis: Option<usize>,
    pub radial_order: usize,
    pub angular_points: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            m_max: 4,
            k_max: 4,
            n_basis: None,
            radial_order: 48,
            angular_points: 64,
        }
    }
}

impl Truncation {
    pub fn quad(&self) -> QuadOptions {
        QuadOptions {
            radial_order: self.radial_order,
            angular_points: self.angular_points,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CnSettings {
    pub dt: f64,
    pub dr_far: f64,
    pub boundary_tol: f64,
    pub r_max: Option<f64>,
}

impl Default for CnSettings {
    fn default() -> Self {
        let d = CnOptions::default();
        CnSettings {
            dt: d.dt,
            dr_far: d.dr_far,
            boundary_tol: d.boundary_tol,
            r_max: d.r_max,
        }
    }
}

impl CnSettings {
    pub fn options(&self) -> CnOptions {
        CnOptions {
            dt: self.dt,
            dr_far: self.dr_far,
            boundary_tol: self.boundary_tol,
            r_max: self.r_max,
            ..CnOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    Kernel,
    Cn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    /// t^γ Ṽ_{m,k}(x/√t) built from an eigenmode datum.
    SelfSimilar,
    /// The evolved datum observed backwards from the horizon.
    Evolution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Spectrum,
    Kernel {
        /// Slice K(x, x + d·direction) for d in [0, d_max].
        #[serde(default)]
        x: Option<Vec<f64>>,
        #[serde(default)]
        direction: Option<Vec<f64>>,
        #[serde(default = "default_d_max")]
        d_max: f64,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default)]
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    Evolve {
        times: Vec<f64>,
        #[serde(default = "default_method")]
        method: Method,
        /// Points at which the solution is sampled.
        #[serde(default)]
        probes: Vec<Vec<f64>>,
        #[serde(default)]
        cn: CnSettings,
    },
    Frequency {
        #[serde(default)]
        source: Option<FieldSource>,
        #[serde(default = "default_t0")]
        t0: f64,
        #[serde(default = "default_rungs")]
        rungs: usize,
        #[serde(default)]
        expect_gamma: Option<f64>,
        #[serde(default = "default_gamma_tol")]
        gamma_tol: f64,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
        #[serde(default)]
        spread_tol: Option<f64>,
        /// Blow-up distances are taken over t ∈ [tau, 1].
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        cn: CnSettings,
    },
    Inequalities {
        #[serde(default = "default_fields")]
        fields: u64,
        #[serde(default = "default_margin_tol")]
        margin_tol: f64,
        #[serde(default = "default_sobolev_s")]
        sobolev_s: f64,
        #[serde(default)]
        best_constant: bool,
    },
    Crosscheck {
        times: Vec<f64>,
        #[serde(default = "default_crosscheck_tol")]
        tolerance: f64,
        #[serde(default)]
        cn: CnSettings,
    },
}

fn default_d_max() -> f64 {
    4.0
}
fn default_points() -> usize {
    41
}
fn default_tail_tol() -> f64 {
    1e-9
}
fn default_method() -> Method {
    Method::Spectral
}
fn default_t0() -> f64 {
    1.0
}
fn default_rungs() -> usize {
    8
}
fn default_gamma_tol() -> f64 {
    1e-4
}
fn default_lambdas() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5]
}
fn default_tau() -> f64 {
    0.1
}
fn default_fields() -> u64 {
    1000
}
fn default_margin_tol() -> f64 {
    1e-10
}
fn default_sobolev_s() -> f64 {
    3.0
}
fn default_crosscheck_tol() -> f64 {
    1e-3
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Kernel { .. } => "kernel",
            Task::Evolve { .. } => "evolve",
            Task::Frequency { .. } => "frequency",
            Task::Inequalities { .. } => "inequalities",
            Task::Crosscheck { .. } => "crosscheck",
        }
    }

    fn needs_datum(&self) -> bool {
        matches!(self, Task::Evolve { .. } | Task::Frequency { .. } | Task::Crosscheck { .. })
    }
}

fn series(terms: &[(i64, f64, f64)]) -> FourierSeries {
    let t: Vec<(i64, C64)> = terms.iter().map(|&(n, re, im)| (n, C64::new(re, im))).collect();
    FourierSeries::from_terms(&t)
}

fn config(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    /// Checks that do not need the angular spectrum.
    pub fn validate(&self) -> Result<(), RunError> {
        let p = &self.problem;
        let dim = match p.potential {
            Potential::AharonovBohm { .. } | Potential::Fourier { .. } => 2,
            Potential::SphereConstant { .. } => p.dimension,
        };
        if p.dimension != dim {
            return Err(config(format!("problem.dimension: {} does not match the potential (N = {dim})", p.dimension)));
        }
        if dim < 2 {
            return Err(config("problem.dimension: must be at least 2"));
        }
        if let Some(h) = p.h {
            StaticPerturbation::new(h.c0, h.c1, h.epsilon).map_err(|e| config(format!("problem.h: {e}")))?;
        }
        if !(p.horizon > 0.0) {
            return Err(config("problem.horizon: must be positive"));
        }
        if self.tasks.is_empty() {
            return Err(config("tasks: at least one task is required"));
        }
        let t = &self.truncation;
        if t.radial_order == 0 || t.angular_points == 0 {
            return Err(config("truncation: quadrature orders must be positive"));
        }
        for (i, task) in self.tasks.iter().enumerate() {
            if task.needs_datum() && self.datum.is_none() {
                return Err(config(format!("tasks[{i}] ({}): needs a datum", task.name())));
            }
            self.validate_task(i, task, dim)?;
        }
        if let Some(d) = &self.datum {
            match d {
                DatumSpec::Gaussian { center, width } => {
                    if center.len() != dim {
                        return Err(config(format!("datum.center: expected {dim} coordinates")));
                    }
                    if !(*width > 0.0) {
                        return Err(config("datum.width: must be positive"));
                    }
                }
                DatumSpec::Table { r, re, im, .. } => {
                    if r.len() < 2 || re.len() != r.len() || !(im.is_empty() || im.len() == r.len()) {
                        return Err(config("datum: table columns must have equal length ≥ 2"));
                    }
                    if r.windows(2).any(|w| !(w[1] > w[0])) || r[0] < 0.0 {
                        return Err(config("datum.r: radii must be nonnegative and increasing"));
                    }
                }
                DatumSpec::Eigenmode { .. } => {}
            }
        }
        Ok(())
    }

    fn validate_task(&self, i: usize, task: &Task, dim: usize) -> Result<(), RunError> {
        let at = |msg: &str| config(format!("tasks[{i}] ({}): {msg}", task.name()));
        let times_ok = |ts: &[f64]| !ts.is_empty() && ts.iter().all(|&t| t > 0.0 && t.is_finite()) && ts.windows(2).all(|w| w[1] > w[0]);
        match task {
            Task::Spectrum => {}
            Task::Kernel { x, direction, points, pairs, d_max, .. } => {
                for v in x.iter().chain(direction.iter()) {
                    if v.len() != dim {
                        return Err(at(&format!("points need {dim} coordinates")));
                    }
                }
                if pairs.iter().any(|(a, b)| a.len() != dim || b.len() != dim) {
                    return Err(at(&format!("pairs need {dim} coordinates")));
                }
                if *points < 2 || !(*d_max > 0.0) {
                    return Err(at("slice needs points ≥ 2 and d_max > 0"));
                }
            }
            Task::Evolve { times, probes, method, .. } => {
                if !times_ok(times) {
                    return Err(at("times must be positive and increasing"));
                }
                if probes.iter().any(|p| p.len() != dim) {
                    return Err(at(&format!("probes need {dim} coordinates")));
                }
                if times.last().copied().unwrap_or(0.0) > self.problem.horizon {
                    return Err(at("times exceed problem.horizon"));
                }
                if *method != Method::Cn && self.problem.h.is_some() {
                    return Err(at("only the cn method handles a perturbation h"));
                }
            }
            Task::Frequency { t0, rungs, lambdas, tau, .. } => {
                if !(*tau > 0.0 && *tau < 1.0) {
                    return Err(at("tau must lie in (0, 1)"));
                }
                if !(*t0 > 0.0) || *rungs < 3 {
                    return Err(at("needs t0 > 0 and at least 3 rungs"));
                }
                if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
                    return Err(at("lambdas must lie in (0, 1]"));
                }
            }
            Task::Inequalities { fields, sobolev_s, .. } => {
                if *fields == 0 {
                    return Err(at("fields must be positive"));
                }
                let n = dim as f64;
                if *sobolev_s < 2.0 || (dim >= 3 && *sobolev_s > 2.0 * n / (n - 2.0)) {
                    return Err(at("sobolev_s outside the Sobolev range"));
                }
            }
            Task::Crosscheck { times, .. } => {
                if !times_ok(times) {
                    return Err(at("times must be positive and increasing"));
                }
                if self.problem.h.is_some() {
                    return Err(at("the spectral side needs h ≡ 0"));
                }
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> AngularPotential {
        match &self.problem.potential {
            Potential::AharonovBohm { circulation } => AngularPotential::AharonovBohm { circulation: *circulation },
            Potential::Fourier { a, tangential } => AngularPotential::Fourier { a: series(a), tangential: series(tangential) },
            Potential::SphereConstant { a } => AngularPotential::SphereConstant { dim: self.problem.dimension, a: *a },
        }
    }

    pub fn perturbation(&self) -> Option<StaticPerturbation> {
        self.problem
            .h
            .map(|h| StaticPerturbation { c0: h.c0, c1: h.c1, epsilon: h.epsilon })
            .filter(|h| !h.is_zero())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, RunError> {
        ProblemSpec::new(self.potential(), self.perturbation(), self.problem.horizon).map_err(RunError::from)
    }

    /// The angular spectrum, refusing potentials that violate the Hardy
    /// condition.
    pub fn spectrum(&self) -> Result<Arc<AngularSpectrum>, RunError> {
        let s = AngularSpectrum::new(self.potential(), self.truncation.k_max, self.truncation.n_basis)?;
        let hardy = s.hardy();
        if !hardy.holds {
            return Err(config(format!(
                "Hardy condition fails: mu_1 + ((N-2)/2)^2 = {:.6e} (mu_1 = {:.6e})",
                hardy.margin,
                s.mu(1)
            )));
        }
        Ok(Arc::new(s))
    }
}
