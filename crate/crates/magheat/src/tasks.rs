//! One function per scenario task. Each returns tables, plot data, a JSON
//! summary and the outcome of its configured assertions.

use std::sync::Arc;

use magheat_core::almgren::{
    beta_coefficients, blowup_distance, frequency, geometric_ladder, FrequencyOptions, FrequencyTrace,
};
use magheat_core::angular::{AngularPotential, AngularSpectrum};
use magheat_core::cn::{compare_with_spectral, CnSolver};
use magheat_core::field::{point_value, weighted_l2, QuadOptions, Snapshot, SolutionField, TimeReversed, Weight};
use magheat_core::inequality::{hardy_best_constant_estimate, run_suite, SuiteOptions, SuiteReport, DEFAULT_LADDER};
use magheat_core::kernel::{expand_datum, HeatKernel, KernelConfig, KernelSolution};
use magheat_core::ou::{mode_table, SelfSimilarField};
use magheat_core::problem::{ProblemSpec, StaticPerturbation};
use magheat_core::C64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::datum::Datum;
use crate::output::{emit_plot_data, Cell, PlotData, Table};
use crate::scenario::{CnSettings, FieldSource, Method, Scenario, Task};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct TaskOutput {
    pub summary: Value,
    pub tables: Vec<Table>,
    pub plots: Vec<PlotData>,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
}

impl TaskOutput {
    fn assert(&mut self, name: &str, pass: bool, detail: String) {
        self.assertions.push(Assertion { name: name.into(), pass, detail });
    }
}

pub struct Context<'a> {
    pub scenario: &'a Scenario,
    pub problem: ProblemSpec,
    pub spectrum: Arc<AngularSpectrum>,
    pub datum: Option<Datum>,
    pub seed: u64,
    pub pool: &'a rayon::ThreadPool,
}

impl Context<'_> {
    fn quad(&self) -> QuadOptions {
        self.scenario.truncation.quad()
    }

    fn datum(&self) -> Result<&Datum, RunError> {
        self.datum.as_ref().ok_or_else(|| RunError::Config("this task needs a datum".into()))
    }

    fn h(&self) -> Option<StaticPerturbation> {
        self.problem.perturbation
    }

    fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn run(&self, task: &Task) -> Result<TaskOutput, RunError> {
        match task {
            Task::Spectrum => self.spectrum_task(),
            Task::Kernel { x, direction, d_max, points, pairs, tail_tol } => {
                self.kernel_task(x.as_deref(), direction.as_deref(), *d_max, *points, pairs, *tail_tol)
            }
            Task::Evolve { times, method, probes, cn } => self.evolve_task(times, *method, probes, cn),
            Task::Frequency { source, t0, rungs, expect_gamma, gamma_tol, lambdas, spread_tol, tau, cn } => {
                self.frequency_task(*source, *t0, *rungs, *expect_gamma, *gamma_tol, lambdas, *spread_tol, *tau, cn)
            }
            Task::Inequalities { fields, margin_tol, sobolev_s, best_constant } => {
                self.inequality_task(*fields, *margin_tol, *sobolev_s, *best_constant)
            }
            Task::Crosscheck { times, tolerance, cn } => self.crosscheck_task(times, *tolerance, cn),
        }
    }

    fn spectrum_task(&self) -> Result<TaskOutput, RunError> {
        let s = &self.spectrum;
        let mut out = TaskOutput::default();
        let mut ang = Table::new("angular", &["k", "label", "mu"]);
        for (i, p) in s.pairs().iter().enumerate() {
            ang.push(vec![(i + 1).into(), p.label.to_string().into(), p.mu.into()]);
        }
        let mut modes = Table::new("modes", &["m", "k", "label", "mu", "alpha", "beta", "gamma", "gamma_tilde", "norm_sq"]);
        for md in mode_table(s, self.scenario.truncation.m_max)? {
            modes.push(vec![
                md.m.into(),
                md.k.into(),
                md.label.to_string().into(),
                md.mu.into(),
                md.alpha.into(),
                md.beta.into(),
                md.gamma.into(),
                md.gamma_tilde.into(),
                md.norm_sq.into(),
            ]);
        }
        let hardy = s.hardy();
        out.summary = json!({
            "dimension": s.dim(),
            "angular_pairs": s.len(),
            "mu_1": s.mu(1),
            "beta_1": s.beta1(),
            "hardy_margin": hardy.margin,
        });
        out.tables = vec![ang, modes];
        Ok(out)
    }

    fn kernel_task(
        &self,
        x: Option<&[f64]>,
        direction: Option<&[f64]>,
        d_max: f64,
        points: usize,
        pairs: &[(Vec<f64>, Vec<f64>)],
        tail_tol: f64,
    ) -> Result<TaskOutput, RunError> {
        let dim = self.dim();
        let cfg = KernelConfig {
            k_max: self.scenario.truncation.k_max,
            tail_tol,
            ..KernelConfig::default()
        };
        let kernel = HeatKernel::new(self.spectrum.clone(), cfg)?;
        let unit = |i: usize| -> Vec<f64> { (0..dim).map(|j| if j == i { 1.0 } else { 0.0 }).collect() };
        let x0 = x.map(<[f64]>::to_vec).unwrap_or_else(|| unit(0));
        let mut dir = direction.map(<[f64]>::to_vec).unwrap_or_else(|| unit(1));
        let norm = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(RunError::Config("kernel.direction must be nonzero".into()));
        }
        dir.iter_mut().for_each(|a| *a /= norm);
        let free = is_free(self.spectrum.potential());
        let free_k = |d2: f64| (4.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0) * (-d2 / 4.0).exp();

        let slice: Vec<(f64, Vec<f64>)> = (0..points)
            .map(|i| {
                let d = d_max * i as f64 / (points - 1) as f64;
                (d, x0.iter().zip(&dir).map(|(a, b)| a + d * b).collect())
            })
            .collect();
        let values = self.pool.install(|| {
            slice
                .par_iter()
                .map(|(_, y)| kernel.eval(&x0, y))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let mut cols = vec!["d", "re", "im", "abs", "tail"];
        if free {
            cols.push("free");
        }
        let mut t = Table::new("slice", &cols);
        let mut plot = Vec::new();
        let mut worst: f64 = 0.0;
        for ((d, _), v) in slice.iter().zip(&values) {
            let mut row: Vec<Cell> = vec![(*d).into(), v.value.re.into(), v.value.im.into(), v.value.norm().into(), v.tail.into()];
            if free {
                let f = free_k(d * d);
                worst = worst.max((v.value - f).norm());
                row.push(f.into());
            }
            t.push(row);
            plot.push(vec![*d, v.value.norm()]);
        }
        let mut out = TaskOutput::default();
        out.plots.push(emit_plot_data("kernel_slice", &["d", "abs_K"], plot)?);
        out.tables.push(t);
        if !pairs.is_empty() {
            let vals = self.pool.install(|| {
                pairs
                    .par_iter()
                    .map(|(a, b)| kernel.eval(a, b))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let mut pt = Table::new("pairs", &["x", "y", "re", "im", "tail"]);
            for ((a, b), v) in pairs.iter().zip(&vals) {
                if free {
                    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                    worst = worst.max((v.value - free_k(d2)).norm());
                }
                pt.push(vec![coords(a).into(), coords(b).into(), v.value.re.into(), v.value.im.into(), v.tail.into()]);
            }
            out.tables.push(pt);
        }
        out.summary = json!({ "points": points, "pairs": pairs.len(), "free": free });
        if free {
            out.summary["max_free_deviation"] = json!(worst);
            out.assert("free kernel reduction", worst <= 1e-8, format!("max |K − free heat kernel| = {worst:e}"));
        }
        Ok(out)
    }

    fn evolve_task(&self, times: &[f64], method: Method, probes: &[Vec<f64>], cn: &CnSettings) -> Result<TaskOutput, RunError> {
        let dim = self.dim();
        let datum = self.datum()?;
        let probes: Vec<Vec<f64>> = if probes.is_empty() {
            (1..=12).map(|i| (0..dim).map(|j| if j == 0 { 0.25 * i as f64 } else { 0.0 }).collect()).collect()
        } else {
            probes.to_vec()
        };
        let mut out = TaskOutput::default();
        let quad = self.quad();
        let field: Box<dyn SolutionField + Sync> = match method {
            Method::Spectral => {
                let st = expand_datum(datum, self.spectrum.clone(), self.scenario.truncation.m_max, self.spectrum.len(), &quad)?;
                if st.residual > 1e-6 {
                    out.warnings.push(format!("spectral truncation residual {:e}", st.residual));
                }
                out.summary["expansion_residual"] = json!(st.residual);
                Box::new(st.solution())
            }
            Method::Kernel => {
                let kernel = HeatKernel::new(self.spectrum.clone(), KernelConfig::default())?;
                let sol = KernelSolution::new(datum, &kernel)?;
                out.summary["datum_tail"] = json!(sol.tail());
                Box::new(sol)
            }
            Method::Cn => {
                let solver = CnSolver::new(&self.problem, self.spectrum.clone(), times[times.len() - 1], cn.options())?;
                if solver.low_confidence {
                    out.warnings.push("Crank–Nicolson run flagged low confidence (β₁ close to 0)".into());
                }
                Box::new(solver.evolve(datum, times)?)
            }
        };
        let field = &*field;
        let rows: Vec<Vec<Cell>> = self.pool.install(|| {
            times
                .par_iter()
                .flat_map_iter(|&t| {
                    probes.iter().map(move |p| {
                        let v = point_value(&Snapshot::new(field, t), p)?;
                        let mut row: Vec<Cell> = vec![t.into()];
                        row.extend(p.iter().map(|&c| Cell::F(c)));
                        row.push(v.re.into());
                        row.push(v.im.into());
                        Ok::<_, magheat_core::Error>(row)
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let mut cols: Vec<String> = vec!["t".into()];
        cols.extend((1..=dim).map(|i| format!("x{i}")));
        cols.extend(["re".into(), "im".into()]);
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut t = Table::new("probes", &col_refs);
        rows.into_iter().for_each(|r| t.push(r));
        let mut norms = Table::new("norms", &["t", "l2_gaussian"]);
        for &tt in times {
            let n = weighted_l2(&Snapshot::new(field, tt), Weight::gaussian(dim, 1.0), &quad)?;
            norms.push(vec![tt.into(), n.into()]);
        }
        out.summary["method"] = json!(method);
        out.tables = vec![t, norms];
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn frequency_task(
        &self,
        source: Option<FieldSource>,
        t0: f64,
        rungs: usize,
        expect_gamma: Option<f64>,
        gamma_tol: f64,
        lambdas: &[f64],
        spread_tol: Option<f64>,
        tau: f64,
        cn: &CnSettings,
    ) -> Result<TaskOutput, RunError> {
        let datum = self.datum()?;
        let source = source.unwrap_or(match datum {
            Datum::Mode { .. } => FieldSource::SelfSimilar,
            _ => FieldSource::Evolution,
        });
        let h = self.h();
        let horizon = self.problem.horizon;
        let opts = FrequencyOptions {
            quad: self.quad(),
            m_max: self.scenario.truncation.m_max.max(8),
            ..FrequencyOptions::default()
        };
        let ladder = geometric_ladder(t0, rungs);
        let field: Box<dyn SolutionField + Sync> = match source {
            FieldSource::SelfSimilar => {
                let Datum::Mode { mode, amplitude, .. } = datum else {
                    return Err(RunError::Config("frequency.source self_similar needs an eigenmode datum".into()));
                };
                if h.is_some_and(|h| h.c1 != 0.0) {
                    return Err(RunError::Config(
                        "frequency.source self_similar is exact only for constant h; use source evolution".into(),
                    ));
                }
                let f = SelfSimilarField::new(self.spectrum.clone(), vec![(mode.clone(), *amplitude)]);
                Box::new(f.with_damping(h.map_or(0.0, |h| h.c0)))
            }
            FieldSource::Evolution => {
                if !(t0 <= horizon) {
                    return Err(RunError::Config("frequency.t0 must not exceed problem.horizon".into()));
                }
                match h {
                    None => {
                        let st = expand_datum(datum, self.spectrum.clone(), self.scenario.truncation.m_max, self.spectrum.len(), &opts.quad)?;
                        Box::new(TimeReversed { field: st.solution(), t0: horizon })
                    }
                    Some(_) => {
                        // Every rung must land on a time step: dt divides the
                        // finest rung, which must divide the horizon.
                        let t_min = ladder[0];
                        let steps = (horizon / t_min).round();
                        if (steps * t_min - horizon).abs() > 1e-9 * horizon {
                            return Err(RunError::Config(format!(
                                "frequency: with a perturbation the horizon must be a multiple of the finest rung t0·2^(1−rungs) = {t_min:e}"
                            )));
                        }
                        let mut options = cn.options();
                        options.dt = t_min / (t_min / options.dt).ceil();
                        let mut fwd: Vec<f64> = ladder.iter().map(|&t| horizon - t).filter(|&t| t > 0.0).collect();
                        fwd.reverse();
                        fwd.push(horizon);
                        let solver = CnSolver::new(&self.problem, self.spectrum.clone(), horizon, options)?;
                        Box::new(TimeReversed { field: solver.evolve(datum, &fwd)?, t0: horizon })
                    }
                }
            }
        };
        let field = &*field;
        let trace = frequency(field, &ladder, h.as_ref(), &opts)?;
        let mut out = TaskOutput::default();
        out.tables.push(trace_table(&trace));
        out.plots.push(emit_plot_data(
            "frequency",
            &["t", "N"],
            trace.samples.iter().map(|s| vec![s.t, s.n]).collect(),
        )?);
        out.summary = json!({
            "source": source,
            "gamma_fit": trace.gamma_fit,
            "fit_ratio": trace.fit.ratio,
            "fit_previous": trace.fit.previous,
            "fit_change": trace.fit.change,
        });
        if trace.fit.change > gamma_tol {
            out.warnings.push(format!("frequency fit moved by {:e} between the last two estimates", trace.fit.change));
        }
        if let Some(g) = expect_gamma {
            let err = (trace.gamma_fit - g).abs();
            out.assert("gamma_fit", err <= gamma_tol, format!("gamma_fit {} vs expected {g} (|Δ| = {err:e})", trace.gamma_fit));
        }
        let Some(space) = &trace.matched else {
            out.warnings.push(format!("no eigenvalue within {:e} of gamma_fit", opts.match_tol));
            return Ok(out);
        };
        out.summary["matched_gamma"] = json!(space.gamma);
        out.summary["matched_modes"] = json!(trace.matched_labels().iter().map(|(m, l)| format!("m={m};{l}")).collect::<Vec<_>>());
        out.summary["possibly_incomplete"] = json!(space.possibly_incomplete);
        if space.possibly_incomplete {
            out.warnings.push("the angular truncation may hide further modes of the matched eigenspace".into());
        }
        let betas = beta_coefficients(field, &space.modes, space.gamma, lambdas, h.as_ref(), &opts)?;
        let mut bt = Table::new("betas", &["m", "k", "label", "re", "im"]);
        for (md, b) in space.modes.iter().zip(&betas.betas) {
            bt.push(vec![md.m.into(), md.k.into(), md.label.to_string().into(), b.re.into(), b.im.into()]);
        }
        let mut lt = Table::new("betas_per_lambda", &["lambda", "m", "k", "re", "im"]);
        for (lam, row) in lambdas.iter().zip(&betas.per_lambda) {
            for (md, b) in space.modes.iter().zip(row) {
                lt.push(vec![(*lam).into(), md.m.into(), md.k.into(), b.re.into(), b.im.into()]);
            }
        }
        out.summary["beta_spread"] = json!(betas.spread);
        if let Some(tol) = spread_tol {
            out.assert("beta lambda-spread", betas.spread <= tol, format!("relative spread {:e} (tolerance {tol:e})", betas.spread));
        }
        let blow = blowup_distance(field, space.gamma, &space.modes, &betas.betas, lambdas, tau, &opts)?;
        let mut et = Table::new("blowup", &["lambda", "sup_l", "h_integral"]);
        for e in &blow {
            et.push(vec![e.lambda.into(), e.sup_l.into(), e.h_integral.into()]);
        }
        out.plots.push(emit_plot_data("blowup", &["lambda", "error"], blow.iter().map(|e| vec![e.lambda, e.sup_l]).collect())?);
        out.tables.extend([bt, lt, et]);
        Ok(out)
    }

    fn inequality_task(&self, fields: u64, margin_tol: f64, sobolev_s: f64, best_constant: bool) -> Result<TaskOutput, RunError> {
        let opts = SuiteOptions { sobolev_s, ..SuiteOptions::default() };
        let chunk = 25u64;
        let ranges: Vec<std::ops::Range<u64>> = (0..fields.div_ceil(chunk)).map(|c| c * chunk..((c + 1) * chunk).min(fields)).collect();
        let spectrum = &self.spectrum;
        let seed = self.seed;
        let parts = self.pool.install(|| {
            ranges
                .into_par_iter()
                .map(|r| run_suite(spectrum, seed, r, &opts))
                .collect::<Result<Vec<SuiteReport>, _>>()
        })?;
        let rep = parts.into_iter().reduce(SuiteReport::merge).expect("at least one chunk");
        let mut out = TaskOutput::default();
        let mut t = Table::new("margins", &["inequality", "worst"]);
        if let Some(p) = rep.hardy_parabolic {
            t.push(vec![Cell::S("hardy_parabolic".into()), p.into()]);
        }
        t.push(vec![Cell::S("hardy_magnetic".into()), rep.hardy_magnetic.into()]);
        t.push(vec![Cell::S("moment".into()), rep.moment.into()]);
        t.push(vec![Cell::S("diamagnetic".into()), rep.diamagnetic.into()]);
        t.push(vec![Cell::S("sobolev_ratio_max".into()), rep.sobolev_ratio.into()]);
        t.push(vec![Cell::S("sobolev_exponent_error".into()), rep.sobolev_exponent_error.into()]);
        out.tables.push(t);
        out.summary = json!({
            "fields": rep.fields,
            "seed": seed,
            "worst_margin": rep.worst(),
            "sobolev_s": sobolev_s,
            "sobolev_ratio_max": rep.sobolev_ratio,
        });
        out.assert("margins nonnegative", rep.holds(margin_tol), format!("worst margin {:e} (tolerance {margin_tol:e})", rep.worst()));
        out.assert(
            "sobolev scaling",
            rep.sobolev_exponent_error < 1e-8,
            format!("max exponent deviation {:e}", rep.sobolev_exponent_error),
        );
        if best_constant {
            let est = hardy_best_constant_estimate(spectrum, &DEFAULT_LADDER, &self.quad())?;
            let n = spectrum.dim() as f64;
            let limit = spectrum.mu(1) + (n - 2.0) * (n - 2.0) / 4.0;
            let mut bt = Table::new("best_constant", &["epsilon", "ratio"]);
            est.iter().for_each(|&(e, r)| bt.push(vec![e.into(), r.into()]));
            out.tables.push(bt);
            let sharpest = est.last().map_or(f64::NAN, |e| e.1);
            let rel = (sharpest - limit).abs() / limit.abs();
            out.summary["best_constant"] = json!({ "estimate": sharpest, "limit": limit, "relative_error": rel });
            out.assert("best constant", rel <= 0.05 && sharpest >= limit, format!("{sharpest} vs {limit} ({:.2}%)", 100.0 * rel));
        }
        Ok(out)
    }

    fn crosscheck_task(&self, times: &[f64], tolerance: f64, cn: &CnSettings) -> Result<TaskOutput, RunError> {
        let datum = self.datum()?;
        let r = compare_with_spectral(
            &self.problem,
            self.spectrum.clone(),
            datum,
            times,
            self.scenario.truncation.m_max,
            tolerance,
            cn.options(),
            &self.quad(),
        )?;
        let mut out = TaskOutput::default();
        let mut t = Table::new("errors", &["t", "rel_error"]);
        for (tt, e) in r.times.iter().zip(&r.rel_errors) {
            t.push(vec![(*tt).into(), (*e).into()]);
        }
        out.tables.push(t);
        let worst = r.rel_errors.iter().copied().fold(0.0, f64::max);
        out.summary = json!({ "max_rel_error": worst, "tolerance": tolerance, "low_confidence": r.low_confidence });
        if r.low_confidence {
            out.warnings.push("Crank–Nicolson run flagged low confidence (β₁ close to 0)".into());
        }
        out.assert("crosscheck", r.pass, format!("max relative 𝓛-error {worst:e} (tolerance {tolerance:e})"));
        Ok(out)
    }
}

fn trace_table(tr: &FrequencyTrace) -> Table {
    let mut t = Table::new("trace", &["t", "H", "D", "N"]);
    for s in &tr.samples {
        t.push(vec![s.t.into(), s.h.into(), s.d.into(), s.n.into()]);
    }
    t
}

fn coords(p: &[f64]) -> String {
    p.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

fn is_free(p: &AngularPotential) -> bool {
    match p {
        AngularPotential::AharonovBohm { circulation } => *circulation == 0.0,
        AngularPotential::SphereConstant { a, .. } => *a == 0.0,
        AngularPotential::Fourier { a, tangential } => {
            a.coeffs().iter().chain(tangential.coeffs()).all(|c| *c == C64::new(0.0, 0.0))
        }
    }
}
