//! Initial data built from a scenario: usable both in modal form (spectral
//! expansion, Crank–Nicolson) and pointwise (kernel representation).

use std::sync::Arc;

use magheat_core::angular::AngularSpectrum;
use magheat_core::field::{point_value, PointField, Profile, RadialField};
use magheat_core::kernel::AngularProjection;
use magheat_core::ou::{ModeSum, SpectralMode};
use magheat_core::C64;

use crate::scenario::{DatumSpec, Truncation};
use crate::RunError;

#[derive(Debug, Clone)]
pub struct GaussianBump {
    pub center: Vec<f64>,
    pub width: f64,
}

impl PointField for GaussianBump {
    fn value(&self, x: &[f64]) -> C64 {
        let d: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        C64::new((-d / (2.0 * self.width * self.width)).exp(), 0.0)
    }
}

/// Tabulated radial profile on one angular component.
pub struct TableField {
    spectrum: Arc<AngularSpectrum>,
    k: usize,
    r: Vec<f64>,
    v: Vec<C64>,
    slope: Vec<C64>,
}

impl TableField {
    fn new(spectrum: Arc<AngularSpectrum>, k: usize, r: Vec<f64>, v: Vec<C64>) -> Self {
        // Catmull–Rom slopes, one-sided at the ends.
        let n = r.len();
        let slope = (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (v[b] - v[a]) / (r[b] - r[a])
            })
            .collect();
        TableField { spectrum, k, r, v, slope }
    }
}

impl RadialField for TableField {
    fn spectrum(&self) -> &AngularSpectrum {
        &self.spectrum
    }
    fn components(&self) -> Vec<usize> {
        vec![self.k]
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        let n = self.r.len();
        if k != self.k || r > self.r[n - 1] {
            return Profile::default();
        }
        if r <= self.r[0] {
            return Profile::new(self.v[0], self.slope[0]);
        }
        let i = self.r.partition_point(|&x| x <= r).min(n - 1) - 1;
        let h = self.r[i + 1] - self.r[i];
        let s = (r - self.r[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
        let (d00, d10, d01, d11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
        let (p0, p1, m0, m1) = (self.v[i], self.v[i + 1], self.slope[i] * h, self.slope[i + 1] * h);
        Profile::new(
            p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11,
            (p0 * d00 + m0 * d10 + p1 * d01 + m1 * d11) / h,
        )
    }
    fn leading_power(&self, _k: usize) -> f64 {
        0.0
    }
}

pub enum Datum {
    Mode { field: ModeSum, mode: SpectralMode, amplitude: C64 },
    Gaussian(AngularProjection<GaussianBump>),
    Table(TableField),
}

impl Datum {
    pub fn build(spec: &DatumSpec, spectrum: &Arc<AngularSpectrum>, trunc: &Truncation) -> Result<Datum, RunError> {
        Ok(match spec {
            DatumSpec::Eigenmode { m, k, amplitude } => {
                let mode = SpectralMode::new(*m, *k, spectrum)?;
                let amplitude = C64::new(amplitude.0, amplitude.1);
                let field = ModeSum::new(spectrum.clone(), vec![(mode.clone(), amplitude)]).tilde();
                Datum::Mode { field, mode, amplitude }
            }
            DatumSpec::Gaussian { center, width } => {
                let bump = GaussianBump { center: center.clone(), width: *width };
                let rate = 1.0 / (2.0 * width * width);
                Datum::Gaussian(AngularProjection::new(bump, spectrum.clone(), rate, trunc.angular_points)?)
            }
            DatumSpec::Table { k, r, re, im } => {
                spectrum.pair(*k)?;
                let v = re
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| C64::new(a, im.get(i).copied().unwrap_or(0.0)))
                    .collect();
                Datum::Table(TableField::new(spectrum.clone(), *k, r.clone(), v))
            }
        })
    }

    fn inner(&self) -> &dyn RadialField {
        match self {
            Datum::Mode { field, .. } => field,
            Datum::Gaussian(p) => p,
            Datum::Table(t) => t,
        }
    }
}

impl RadialField for Datum {
    fn spectrum(&self) -> &AngularSpectrum {
        self.inner().spectrum()
    }
    fn components(&self) -> Vec<usize> {
        self.inner().components()
    }
    fn profile(&self, k: usize, r: f64) -> Profile {
        self.inner().profile(k, r)
    }
    fn leading_power(&self, k: usize) -> f64 {
        self.inner().leading_power(k)
    }
    fn gaussian_rate(&self) -> f64 {
        self.inner().gaussian_rate()
    }
}

impl PointField for Datum {
    fn value(&self, x: &[f64]) -> C64 {
        match self {
            Datum::Gaussian(p) => p.datum().value(x),
            _ => point_value(self.inner(), x).unwrap_or_default(),
        }
    }
}
