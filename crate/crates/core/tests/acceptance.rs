//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{ab, ab_mode, heat_kernel, sphere, tanh_sinh};
use magheat_core::almgren::{
    beta_coefficients, compute_d, compute_h, frequency, geometric_ladder, monotone_check_values, monotone_h_check,
    FrequencyOptions,
};
use magheat_core::angular::{AngularPotential, AngularSpectrum, FourierSeries, ModeLabel};
use magheat_core::cn::{coefficient_trace, compare_with_spectral, fit_decay_exponent, relative_distance, CnOptions, CnSolver};
use magheat_core::field::{modal_inner, QuadOptions, Rescaled, TimeReversed, Weight};
use magheat_core::inequality::{hardy_best_constant_estimate, run_suite, SuiteOptions, SuiteReport, DEFAULT_LADDER};
use magheat_core::kernel::{expand_datum, AngularProjection, HeatKernel, KernelConfig, KernelSolution, SpectralState};
use magheat_core::ou::{mode_table, ModeSum, SelfSimilarField, SpectralMode};
use magheat_core::problem::ProblemSpec;
use magheat_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn spectrum_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_fourier: f64 = 0.0;
    for phi in [0.1, 0.3, 0.5] {
        let s = ab(phi, 5);
        let pot = AngularPotential::Fourier { a: FourierSeries::zero(), tangential: FourierSeries::constant(-phi) };
        let f = AngularSpectrum::new(pot, 15, Some(41)).map_err(|e| e.to_string())?;
        for n in -5i64..=5 {
            let k = s.find(ModeLabel::Wavenumber(n)).unwrap();
            let exact_mu = (n as f64 - phi).powi(2);
            let kf = (1..=f.len())
                .min_by(|&a, &b| (f.mu(a) - exact_mu).abs().total_cmp(&(f.mu(b) - exact_mu).abs()))
                .unwrap();
            for m in 0..=5 {
                let g = SpectralMode::new(m, k, &s).unwrap().gamma;
                worst = worst.max((g - (m as f64 + (n as f64 - phi).abs() / 2.0)).abs());
                let gf = SpectralMode::new(m, kf, &f).unwrap().gamma;
                worst_fourier = worst_fourier.max((gf - g).abs());
            }
        }
    }
    check(
        worst <= 1e-12 && worst_fourier <= 1e-10,
        format!("max |γ − (m + |n−Φ|/2)| = {worst:.1e}, Fourier vs explicit {worst_fourier:.1e}"),
    )
}

fn eigenbasis_orthonormality() -> Outcome {
    let quad = QuadOptions::default();
    let mut gram: f64 = 0.0;
    let mut norms: f64 = 0.0;
    for s in [ab(0.3, 2), sphere(3, 0.1, 1)] {
        let dim = s.dim();
        let modes: Vec<SpectralMode> = (0..=4)
            .flat_map(|m| (1..=4).map(move |k| (m, k)))
            .map(|(m, k)| SpectralMode::new(m, k, &s).unwrap())
            .collect();
        for a in &modes {
            let va = ModeSum::single(s.clone(), a.clone());
            for b in &modes {
                let vb = ModeSum::single(s.clone(), b.clone());
                let ip = modal_inner(&va, &vb, Weight::gaussian(dim, 1.0), &quad).map_err(|e| e.to_string())?;
                let e = if a == b { 1.0 } else { 0.0 };
                gram = gram.max((ip - e).norm());
            }
            // Independent radial quadrature of ‖V‖²_𝓛 against the closed form.
            let q = tanh_sinh(0.0, 80.0, |r| {
                let v = a.radial(r).0;
                v * v * r.powi(dim as i32 - 1) * (-r * r / 4.0).exp()
            });
            norms = norms.max((q / a.norm_sq - 1.0).abs());
        }
    }
    check(gram <= 1e-8 && norms <= 1e-8, format!("Gram deviation {gram:.1e}, closed-form norm rel. error {norms:.1e}"))
}

fn eigen_residual() -> Outcome {
    let mut worst: f64 = 0.0;
    for s in [ab(0.1, 5), ab(0.5, 5), sphere(3, 0.1, 3), sphere(4, -0.5, 2)] {
        for mode in mode_table(&s, 6).map_err(|e| e.to_string())? {
            for i in 0..=990 {
                let r = 0.1 + i as f64 * 0.01;
                worst = worst.max(mode.eigen_residual(r));
            }
        }
    }
    check(worst <= 1e-9, format!("max relative residual on [0.1, 10] = {worst:.1e}"))
}

fn kernel_free_reduction() -> Outcome {
    let s = sphere(3, 0.0, 40);
    let k = HeatKernel::new(s, KernelConfig { k_max: 40, ..KernelConfig::default() }).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ball = || loop {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-6.0..6.0));
        let r2: f64 = p.iter().map(|a| a * a).sum();
        if r2 <= 36.0 && r2 > 1e-6 {
            return p;
        }
    };
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (x, y) = (ball(), ball());
        let v = k.eval(&x, &y).map_err(|e| e.to_string())?.value;
        worst = worst.max((v - heat_kernel(3, &x, &y)).norm());
    }
    check(worst <= 1e-8, format!("max |K − (4π)^(-3/2) e^(-|x-y|²/4)| over 200 pairs = {worst:.1e}"))
}

fn representation_vs_oracle() -> Outcome {
    let times = [0.25, 0.5, 1.0];
    let quad = QuadOptions::default();
    let pot = AngularPotential::AharonovBohm { circulation: 0.3 };
    let prob = ProblemSpec::free(pot.clone());
    let mut lines = Vec::new();
    let mut ok = true;

    // Eigen-datum Ũ_{0,n=1}: spectral evolution against CN.
    let s = ab(0.3, 2);
    let u0 = ModeSum::single(s.clone(), ab_mode(&s, 0, 1)).tilde();
    let r = compare_with_spectral(&prob, s.clone(), &u0, &times, 2, 1e-3, CnOptions::default(), &quad)
        .map_err(|e| e.to_string())?;
    ok &= r.pass;
    lines.push(format!("eigen {:.1e}", r.rel_errors.iter().fold(0.0f64, |a, &b| a.max(b))));

    // Off-centre Gaussian: kernel representation against CN.
    let s = ab(0.3, 24);
    let x0 = [0.8, 0.3];
    let datum = move |x: &[f64]| C64::new((-((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)) / 2.0).exp(), 0.0);
    let kernel = HeatKernel::new(s.clone(), KernelConfig::default()).map_err(|e| e.to_string())?;
    let ksol = KernelSolution::new(&datum, &kernel).map_err(|e| e.to_string())?;
    let proj = AngularProjection::new(datum, s.clone(), 0.5, 128).map_err(|e| e.to_string())?;
    let cn = CnSolver::new(&prob, s.clone(), 1.0, CnOptions::default())
        .and_then(|c| c.evolve(&proj, &times))
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for &t in &times {
        worst = worst.max(relative_distance(&cn, &ksol, t, &quad).map_err(|e| e.to_string())?);
    }
    ok &= worst <= 1e-3;
    lines.push(format!("off-centre Gaussian {worst:.1e}"));
    check(ok, format!("max relative 𝓛-error at t ∈ {{0.25, 0.5, 1}}: {}", lines.join(", ")))
}

fn coefficient_decay() -> Outcome {
    let prob = ProblemSpec::free(AngularPotential::AharonovBohm { circulation: 0.3 });
    let s = ab(0.3, 2);
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let solver = CnSolver::new(&prob, s.clone(), 1.0, CnOptions::default()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (m, n) in [(0, 0), (1, 1), (2, -1)] {
        let mode = ab_mode(&s, m, n);
        let u0 = ModeSum::single(s.clone(), mode.clone()).tilde();
        let g = solver.evolve(&u0, &times).map_err(|e| e.to_string())?;
        let c = coefficient_trace(&g, &mode, &times, &QuadOptions::default()).map_err(|e| e.to_string())?;
        let e = fit_decay_exponent(&times, &c).map_err(|e| e.to_string())?;
        worst = worst.max((e - mode.gamma_tilde).abs());
        parts.push(format!("(m={m}, n={n}) {e:.5} vs {:.5}", mode.gamma_tilde));
    }
    check(worst <= 1e-2, format!("{}; max deviation {worst:.1e}", parts.join(", ")))
}

fn frequency_limit() -> Outcome {
    let opts = FrequencyOptions::default();
    let ladder = geometric_ladder(1.0, 8);
    let mut const_dev: f64 = 0.0;
    let mut fit_dev: f64 = 0.0;
    let mut pure = Vec::new();
    for (s, m, k) in [(ab(0.3, 2), 0, 3), (ab(0.3, 2), 2, 1), (sphere(3, 0.1, 2), 1, 2), (sphere(3, 0.0, 1), 0, 1)] {
        let mode = SpectralMode::new(m, k, &s).unwrap();
        pure.push(mode.gamma);
        let f = SelfSimilarField::eigenfield(s.clone(), mode.clone());
        let tr = frequency(&f, &ladder, None, &opts).map_err(|e| e.to_string())?;
        for w in &tr.samples {
            const_dev = const_dev.max((w.n - mode.gamma).abs());
        }
        fit_dev = fit_dev.max((tr.gamma_fit - mode.gamma).abs());
    }
    let mut mix_dev: f64 = 0.0;
    let s = ab(0.3, 2);
    for (a, b, c) in [((0, 0), (1, 0), C64::new(0.5, 0.2)), ((0, 1), (0, -1), C64::new(1.0, 0.0)), ((1, 0), (2, 1), C64::new(0.0, -3.0))] {
        let (ma, mb) = (ab_mode(&s, a.0, a.1), ab_mode(&s, b.0, b.1));
        let low = ma.gamma.min(mb.gamma);
        let f = SelfSimilarField::new(s.clone(), vec![(ma, one()), (mb, c)]);
        let tr = frequency(&f, &ladder, None, &opts).map_err(|e| e.to_string())?;
        mix_dev = mix_dev.max((tr.gamma_fit - low).abs());
    }
    check(
        const_dev <= 1e-6 && fit_dev <= 1e-6 && mix_dev <= 1e-4,
        format!("pure: |N − γ| ≤ {const_dev:.1e}, fit {fit_dev:.1e}; mixtures: fit error {mix_dev:.1e}"),
    )
}

fn beta_formula() -> Outcome {
    let opts = FrequencyOptions::default();
    let lams = [0.1, 0.2, 0.3, 0.4, 0.5];
    // Φ = 1/2 makes n = 0 and n = 1 degenerate.
    let s = ab(0.5, 3);
    let space = [ab_mode(&s, 0, 0), ab_mode(&s, 0, 1)];
    let gamma = space[0].gamma;
    let coeffs = [C64::new(0.7, -0.2), C64::new(-1.1, 0.4)];
    let f = SelfSimilarField::new(
        s.clone(),
        vec![(space[0].clone(), coeffs[0]), (space[1].clone(), coeffs[1]), (ab_mode(&s, 1, 2), C64::new(2.0, 1.0))],
    );
    let r = beta_coefficients(&f, &space, gamma, &lams, None, &opts).map_err(|e| e.to_string())?;
    let recovered = r.betas.iter().zip(&coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mut spread = r.spread;
    let mut pattern: f64 = 0.0;
    let s2 = ab(0.3, 2);
    let modes = [ab_mode(&s2, 0, 0), ab_mode(&s2, 0, 1), ab_mode(&s2, 1, 0)];
    for target in 0..3 {
        let f = SelfSimilarField::eigenfield(s2.clone(), modes[target].clone());
        let r = beta_coefficients(&f, &modes, modes[target].gamma, &lams, None, &opts).map_err(|e| e.to_string())?;
        spread = spread.max(r.spread);
        for (i, b) in r.betas.iter().enumerate() {
            let e = if i == target { 1.0 } else { 0.0 };
            pattern = pattern.max((b - e).norm());
        }
    }
    check(
        spread <= 1e-6 && pattern <= 1e-8 && recovered <= 1e-8,
        format!("Λ-spread {spread:.1e}, eigenfield 1/0 pattern error {pattern:.1e}, degenerate recovery {recovered:.1e}"),
    )
}

fn scaling_identities() -> Outcome {
    let opts = FrequencyOptions::default();
    let s = ab(0.3, 3);
    let ss = SelfSimilarField::new(
        s.clone(),
        vec![(ab_mode(&s, 0, 1), one()), (ab_mode(&s, 2, -1), C64::new(0.0, 0.7)), (ab_mode(&s, 1, 0), C64::new(0.3, 0.0))],
    );
    let modes = mode_table(&s, 3).unwrap();
    let coeffs: Vec<C64> = (0..modes.len()).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64)).collect();
    let st = SpectralState::from_coefficients(s.clone(), modes, coeffs).map_err(|e| e.to_string())?;
    let fwd = TimeReversed { field: st.solution(), t0: 3.0 };
    let mut h_err: f64 = 0.0;
    let mut n_err: f64 = 0.0;
    let mut run = |f: &dyn magheat_core::field::SolutionField| -> Result<(), String> {
        for lam in [0.3, 0.6, 0.9] {
            let scaled = Rescaled { field: f, lambda: lam, factor: 1.0 };
            for &t in &[0.2, 1.0, 2.0] {
                let a = compute_h(&scaled, t, &opts).map_err(|e| e.to_string())?;
                let b = compute_h(f, lam * lam * t, &opts).map_err(|e| e.to_string())?;
                h_err = h_err.max((a - b).abs() / b);
                let na = t * compute_d(&scaled, t, None, &opts).map_err(|e| e.to_string())? / a;
                let nb = lam * lam * t * compute_d(f, lam * lam * t, None, &opts).map_err(|e| e.to_string())? / b;
                n_err = n_err.max((na - nb).abs());
            }
        }
        Ok(())
    };
    run(&ss)?;
    run(&fwd)?;
    check(h_err <= 1e-10 && n_err <= 1e-10, format!("H_λ vs H(λ²t) rel. {h_err:.1e}, 𝒩_λ vs 𝒩(λ²t) {n_err:.1e}"))
}

fn inequality_suite() -> Outcome {
    const FIELDS: u64 = 1000;
    let configs: Vec<(&str, Arc<AngularSpectrum>)> = vec![
        ("AB Φ=0.1", ab(0.1, 3)),
        ("AB Φ=0.3", ab(0.3, 3)),
        ("AB Φ=0.5", ab(0.5, 3)),
        ("N=3 free", sphere(3, 0.0, 2)),
        ("N=3 a=0.1", sphere(3, 0.1, 2)),
    ];
    let opts = SuiteOptions::default();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16) as u64;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, s) in &configs {
        let reports: Vec<Result<SuiteReport, String>> = std::thread::scope(|sc| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let lo = FIELDS * w / workers;
                    let hi = FIELDS * (w + 1) / workers;
                    let s = s.clone();
                    sc.spawn(move || run_suite(&s, 7, lo..hi, &opts).map_err(|e| e.to_string()))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut total: Option<SuiteReport> = None;
        for r in reports {
            let r = r?;
            total = Some(match total {
                Some(t) => t.merge(r),
                None => r,
            });
        }
        let rep = total.unwrap();
        ok &= rep.fields == FIELDS as usize && rep.holds(1e-10) && rep.sobolev_exponent_error < 1e-8;
        parts.push(format!("{name}: worst margin {:.2e}", rep.worst()));
    }
    let est = hardy_best_constant_estimate(&ab(0.3, 2), &DEFAULT_LADDER, &QuadOptions::default()).map_err(|e| e.to_string())?;
    let sharpest = est.last().unwrap().1;
    let from_above = est.windows(2).all(|w| w[1].1 <= w[0].1) && est.iter().all(|e| e.1 >= 0.09);
    let rel = (sharpest - 0.09).abs() / 0.09;
    ok &= from_above && rel <= 0.05;
    parts.push(format!("best constant {sharpest:.5} vs 0.09 ({:.1}%)", rel * 100.0));
    check(ok, parts.join("; "))
}

fn monotonicity() -> Outcome {
    let opts = FrequencyOptions::default();
    let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 0.05).collect();
    let mut count = 0;
    let mut fail = Vec::new();
    let quad = QuadOptions::default();
    for s in [ab(0.3, 2), ab(0.5, 2), sphere(3, 0.0, 1), sphere(3, 0.1, 1)] {
        let modes = mode_table(&s, 3).unwrap();
        let gmin = modes.iter().map(|m| m.gamma).fold(f64::INFINITY, f64::min);
        // Backward self-similar mixtures.
        for seed in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let terms: Vec<(SpectralMode, C64)> =
                modes.iter().map(|m| (m.clone(), C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))).collect();
            let f = SelfSimilarField::new(s.clone(), terms);
            let r = monotone_h_check(&f, &grid, -2.0 * gmin, None, &opts).map_err(|e| e.to_string())?;
            count += 1;
            if !r.holds {
                fail.push(format!("mixture {seed}: step {:?}", r.violation));
            }
        }
        // Forward spectral evolutions observed in the backward variable.
        for seed in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let coeffs: Vec<C64> = modes.iter().map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let st = SpectralState::from_coefficients(s.clone(), modes.clone(), coeffs).map_err(|e| e.to_string())?;
            let f = TimeReversed { field: st.solution(), t0: 2.5 };
            // With a > 0 the energy D can be negative, so only 𝒩 is monotone.
            let r = monotone_h_check(&f, &grid, 0.0, None, &opts).map_err(|e| e.to_string())?;
            count += 1;
            if let Some(i) = monotone_check_values(r.frequency.as_deref().unwrap_or_default(), 1e-8) {
                fail.push(format!("forward {seed}: step {i}"));
            }
        }
    }
    let s = sphere(3, 0.0, 1);
    let gauss = ModeSum::single(s.clone(), SpectralMode::new(0, 1, &s).unwrap()).tilde();
    let st = expand_datum(&gauss, s.clone(), 8, 1, &quad).map_err(|e| e.to_string())?;
    let r = monotone_h_check(&TimeReversed { field: st.solution(), t0: 2.5 }, &grid, 0.0, None, &opts).map_err(|e| e.to_string())?;
    count += 1;
    if !r.holds || r.frequency.is_none() {
        fail.push("gaussian".into());
    }
    check(fail.is_empty(), format!("{count} solutions, 𝒩 nondecreasing within 1e-8 per step{}", if fail.is_empty() { String::new() } else { format!("; violations: {}", fail.join(", ")) }))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 11] = [
        ("spectrum exactness", spectrum_exactness, Duration::from_secs(1)),
        ("eigenbasis orthonormality", eigenbasis_orthonormality, Duration::from_secs(10)),
        ("eigen-residual", eigen_residual, Duration::from_secs(5)),
        ("kernel free-case reduction", kernel_free_reduction, Duration::from_secs(30)),
        ("representation vs oracle", representation_vs_oracle, Duration::from_secs(120)),
        ("coefficient decay", coefficient_decay, Duration::from_secs(60)),
        ("frequency limit", frequency_limit, Duration::from_secs(60)),
        ("beta-coefficient formula", beta_formula, Duration::from_secs(30)),
        ("scaling identities", scaling_identities, Duration::from_secs(10)),
        ("inequality suite", inequality_suite, Duration::from_secs(120)),
        ("monotonicity", monotonicity, Duration::from_secs(30)),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let (tag, detail) = match &out {
            Ok(d) if took <= *budget => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over the {:.0} s budget", budget.as_secs_f64())),
            Err(d) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {tag} {name}: {detail} [{:.2} s]", i + 1, took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
