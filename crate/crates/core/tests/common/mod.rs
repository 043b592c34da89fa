#![allow(dead_code)]

use std::sync::Arc;

use magheat_core::angular::{AngularPotential, AngularSpectrum, ModeLabel};
use magheat_core::ou::SpectralMode;

/// Double-exponential quadrature on [a, b]; converges exponentially even
/// for integrands with algebraic endpoint singularities.
pub fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / 64.0;
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in -448i32..=448 {
        let t = i as f64 * h;
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (s.cosh() * s.cosh());
        // Distance to the nearer endpoint, computed without cancellation.
        let d = half * 2.0 / ((2.0 * s.abs()).exp() + 1.0);
        if d.is_nan() || d <= 0.0 || w == 0.0 {
            continue;
        }
        let x = if i < 0 { a + d } else { b - d };
        sum += w * f(x);
    }
    sum * h * half
}

pub fn ab(phi: f64, k_max: usize) -> Arc<AngularSpectrum> {
    Arc::new(AngularSpectrum::new(AngularPotential::AharonovBohm { circulation: phi }, k_max, None).unwrap())
}

pub fn sphere(dim: usize, a: f64, l_max: usize) -> Arc<AngularSpectrum> {
    Arc::new(AngularSpectrum::new(AngularPotential::SphereConstant { dim, a }, l_max, None).unwrap())
}

pub fn ab_mode(s: &AngularSpectrum, m: usize, n: i64) -> SpectralMode {
    SpectralMode::new(m, s.find(ModeLabel::Wavenumber(n)).unwrap(), s).unwrap()
}

/// (4π)^{−N/2} e^{−|x−y|²/4}.
pub fn heat_kernel(dim: usize, x: &[f64], y: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (4.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0) * (-d / 4.0).exp()
}
