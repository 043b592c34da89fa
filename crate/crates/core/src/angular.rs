//! Eigenpairs of the angular operator (−i∇_S + A)² − a on the unit sphere.
//!
//! On S¹ the operator is discretised in the Fourier basis e^{inθ}/√(2π). For
//! spheres of dimension ≥ 2 only A ≡ 0 with constant a is supported, where the
//! eigenfunctions are spherical harmonics and everything is analytic.
//!
//! Aharonov–Bohm eigenpairs are labelled so that the wavenumber-n mode has
//! μ = (n − Φ)²; in terms of a tangential potential this is A ≡ −Φ.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::DMatrix;

use crate::special::{harmonic_dimension, real_spherical_harmonic, sphere_area};
use crate::{Error, Result, C64};

const TIE_TOL: f64 = 1e-9;

/// Finite Fourier series Σ_{|n|≤M} c_n e^{inθ}.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    max_n: usize,
    coeffs: Vec<C64>,
}

impl FourierSeries {
    /// Coefficients listed for n = −M..=M.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::invalid("fourier", "coefficient list must have odd length 2M+1"));
        }
        Ok(FourierSeries {
            max_n: coeffs.len() / 2,
            coeffs,
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        FourierSeries {
            max_n: 0,
            coeffs: vec![C64::new(c, 0.0)],
        }
    }

    pub fn from_terms(terms: &[(i64, C64)]) -> Self {
        let max_n = terms.iter().map(|t| t.0.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * max_n + 1];
        for &(n, c) in terms {
            coeffs[(n + max_n as i64) as usize] += c;
        }
        FourierSeries { max_n, coeffs }
    }

    pub fn max_wavenumber(&self) -> usize {
        self.max_n
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> C64 {
        if n.unsigned_abs() as usize > self.max_n {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.max_n as i64) as usize]
        }
    }

    pub fn eval(&self, theta: f64) -> C64 {
        let m = self.max_n as i64;
        (-m..=m).map(|n| self.coeff(n) * C64::from_polar(1.0, n as f64 * theta)).sum()
    }

    /// max |c_{−n} − conj(c_n)|; zero for real-valued functions.
    pub fn hermitian_residual(&self) -> f64 {
        let m = self.max_n as i64;
        (0..=m)
            .map(|n| (self.coeff(-n) - self.coeff(n).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Coefficients of the pointwise square, by exact convolution.
    pub fn square(&self) -> FourierSeries {
        let m = self.max_n as i64;
        let terms: Vec<(i64, C64)> = (-2 * m..=2 * m)
            .map(|n| {
                let c = (-m..=m).map(|j| self.coeff(j) * self.coeff(n - j)).sum();
                (n, c)
            })
            .collect();
        Self::from_terms(&terms)
    }

    pub fn shifted(&self, c: f64) -> FourierSeries {
        let mut out = self.clone();
        out.coeffs[self.max_n] += c;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AngularPotential {
    /// N = 2, magnetic potential of circulation Φ, a ≡ 0.
    AharonovBohm { circulation: f64 },
    /// N = 2, general real a(θ) and tangential A(θ) given by Fourier coefficients.
    Fourier { a: FourierSeries, tangential: FourierSeries },
    /// N ≥ 3, A ≡ 0 and constant a.
    SphereConstant { dim: usize, a: f64 },
}

impl AngularPotential {
    pub fn dim(&self) -> usize {
        match self {
            AngularPotential::SphereConstant { dim, .. } => *dim,
            _ => 2,
        }
    }

    /// Tangential component of A at angle θ (N = 2).
    pub fn tangential_at(&self, theta: f64) -> f64 {
        match self {
            AngularPotential::AharonovBohm { circulation } => -circulation,
            AngularPotential::Fourier { tangential, .. } => tangential.eval(theta).re,
            AngularPotential::SphereConstant { .. } => 0.0,
        }
    }

    /// a at a point of the unit sphere.
    pub fn a_at(&self, unit: &[f64]) -> f64 {
        match self {
            AngularPotential::AharonovBohm { .. } => 0.0,
            AngularPotential::Fourier { a, .. } => a.eval(libm::atan2(unit[1], unit[0])).re,
            AngularPotential::SphereConstant { a, .. } => *a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeLabel {
    Wavenumber(i64),
    Harmonic { degree: usize, order: i64 },
}

impl ModeLabel {
    pub fn wavenumber(&self) -> Option<i64> {
        match self {
            ModeLabel::Wavenumber(n) => Some(*n),
            _ => None,
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            ModeLabel::Harmonic { degree, .. } => Some(*degree),
            _ => None,
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Wavenumber(n) => write!(f, "n={n}"),
            ModeLabel::Harmonic { degree, order } => write!(f, "l={degree};m={order}"),
        }
    }
}

/// Angular function as coefficients on the chosen basis.
#[derive(Debug, Clone, PartialEq)]
pub enum AngularVector {
    /// Σ coeffs[i] e^{i(n_min+i)θ}/√(2π).
    Fourier { n_min: i64, coeffs: Vec<C64> },
    /// Σ c Y_{degree,order} over real orthonormal spherical harmonics.
    Harmonic { dim: usize, terms: Vec<(usize, i64, C64)> },
}

impl AngularVector {
    pub fn norm_sqr(&self) -> f64 {
        match self {
            AngularVector::Fourier { coeffs, .. } => coeffs.iter().map(|c| c.norm_sqr()).sum(),
            AngularVector::Harmonic { terms, .. } => terms.iter().map(|t| t.2.norm_sqr()).sum(),
        }
    }

    pub fn fourier_coeff(&self, n: i64) -> C64 {
        match self {
            AngularVector::Fourier { n_min, coeffs } => {
                let i = n - n_min;
                if i < 0 || i as usize >= coeffs.len() {
                    C64::new(0.0, 0.0)
                } else {
                    coeffs[i as usize]
                }
            }
            _ => C64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularEigenpair {
    /// 1-based position in the sorted spectrum.
    pub index: usize,
    pub mu: f64,
    pub psi: AngularVector,
    pub label: ModeLabel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyCheck {
    pub margin: f64,
    pub holds: bool,
}

/// Returns μ₁ + ((N−2)/2)² and whether it is positive.
pub fn check_hardy_condition(pairs: &[AngularEigenpair], dim: usize) -> HardyCheck {
    let mu1 = pairs.iter().map(|p| p.mu).fold(f64::INFINITY, f64::min);
    let h = (dim as f64 - 2.0) / 2.0;
    let margin = mu1 + h * h;
    HardyCheck {
        margin,
        holds: margin > 0.0,
    }
}

fn fourier_pair(index: usize, mu: f64, n: i64) -> AngularEigenpair {
    AngularEigenpair {
        index,
        mu,
        psi: AngularVector::Fourier {
            n_min: n,
            coeffs: vec![C64::new(1.0, 0.0)],
        },
        label: ModeLabel::Wavenumber(n),
    }
}

fn sort_and_index(pairs: &mut [AngularEigenpair]) {
    pairs.sort_by(|a, b| {
        if (a.mu - b.mu).abs() <= TIE_TOL * a.mu.abs().max(1.0) {
            a.label.cmp(&b.label)
        } else {
            a.mu.total_cmp(&b.mu)
        }
    });
    for (i, p) in pairs.iter_mut().enumerate() {
        p.index = i + 1;
    }
}

/// Aharonov–Bohm spectrum for |n| ≤ k_max.
pub fn solve_ab(circulation: f64, k_max: usize) -> Vec<AngularEigenpair> {
    let k = k_max as i64;
    let mut pairs: Vec<_> = (-k..=k)
        .map(|n| {
            let d = n as f64 - circulation;
            fourier_pair(0, d * d, n)
        })
        .collect();
    sort_and_index(&mut pairs);
    pairs
}

/// Galerkin matrix of (−i∂_θ + A)² − a on wavenumbers n_lo..=n_hi.
fn assemble(a: &FourierSeries, tangential: &FourierSeries, n_lo: i64, n_hi: i64) -> DMatrix<C64> {
    let dim = (n_hi - n_lo + 1) as usize;
    let a2 = tangential.square();
    DMatrix::from_fn(dim, dim, |i, j| {
        let p = n_lo + i as i64;
        let q = n_lo + j as i64;
        let d = p - q;
        let mut v = (p + q) as f64 * tangential.coeff(d) + a2.coeff(d) - a.coeff(d);
        if p == q {
            v += (q * q) as f64;
        }
        v
    })
}

/// Smallest k_max eigenpairs of the Fourier–Galerkin discretisation with
/// wavenumbers |n| ≤ n_basis.
pub fn solve_fourier(potential: &AngularPotential, n_basis: usize, k_max: usize) -> Result<Vec<AngularEigenpair>> {
    let (a, tangential) = match potential {
        AngularPotential::Fourier { a, tangential } => (a.clone(), tangential.clone()),
        AngularPotential::AharonovBohm { circulation } => (FourierSeries::zero(), FourierSeries::constant(-circulation)),
        AngularPotential::SphereConstant { .. } => {
            return Err(Error::invalid("potential", "Fourier solver needs an N = 2 potential"))
        }
    };
    if n_basis < 2 * k_max + 8 {
        return Err(Error::invalid(
            "n_basis",
            format!("n_basis = {n_basis} must be at least 2·k_max + 8 = {}", 2 * k_max + 8),
        ));
    }
    let nb = n_basis as i64;
    let m = assemble(&a, &tangential, -nb, nb);
    let residual = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::NonHermitian { residual });
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or_else(|| Error::Eigensolver("Hermitian eigensolver did not converge".into()))?;
    let dim = m.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    // Canonical basis inside clusters of equal eigenvalues: diagonalise the
    // wavenumber operator restricted to the cluster.
    let mut vectors: Vec<(f64, Vec<C64>)> = Vec::with_capacity(dim);
    let mut i = 0;
    while i < dim {
        let mu0 = eig.eigenvalues[order[i]];
        let mut j = i + 1;
        while j < dim && (eig.eigenvalues[order[j]] - mu0).abs() <= TIE_TOL * mu0.abs().max(1.0) {
            j += 1;
        }
        let cols: Vec<Vec<C64>> = order[i..j]
            .iter()
            .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
            .collect();
        let g = cols.len();
        if g == 1 {
            vectors.push((mu0, cols.into_iter().next().unwrap_or_default()));
        } else {
            let w = DMatrix::from_fn(g, g, |a, b| {
                (0..dim)
                    .map(|r| cols[a][r].conj() * cols[b][r] * (r as f64 - nb as f64))
                    .sum::<C64>()
            });
            let we = w.symmetric_eigen();
            let mut idx: Vec<usize> = (0..g).collect();
            idx.sort_by(|&x, &y| we.eigenvalues[x].total_cmp(&we.eigenvalues[y]));
            for &c in &idx {
                let v: Vec<C64> = (0..dim)
                    .map(|r| (0..g).map(|s| cols[s][r] * we.eigenvectors[(s, c)]).sum())
                    .collect();
                let mu = (i..j).map(|t| eig.eigenvalues[order[t]]).sum::<f64>() / g as f64;
                vectors.push((mu, v));
            }
        }
        i = j;
    }

    let mut pairs: Vec<AngularEigenpair> = vectors
        .into_iter()
        .take(k_max)
        .map(|(mu, mut v)| {
            let mut best = 0;
            for r in 0..v.len() {
                if v[r].norm() > v[best].norm() * (1.0 + 1e-12) {
                    best = r;
                }
            }
            let phase = v[best].conj() / v[best].norm();
            let norm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
            for z in v.iter_mut() {
                *z *= phase / norm;
            }
            AngularEigenpair {
                index: 0,
                mu,
                psi: AngularVector::Fourier { n_min: -nb, coeffs: v },
                label: ModeLabel::Wavenumber(best as i64 - nb),
            }
        })
        .collect();
    sort_and_index(&mut pairs);
    Ok(pairs)
}

/// Spherical-harmonic spectrum on S^{N−1} with constant a, degrees ≤ l_max.
pub fn solve_sphere_constant(dim: usize, a: f64, l_max: usize) -> Vec<AngularEigenpair> {
    assert!(dim >= 3, "sphere_constant needs N ≥ 3");
    let mut pairs = Vec::new();
    for l in 0..=l_max {
        let mu = (l * (l + dim - 2)) as f64 - a;
        let orders: Vec<i64> = if dim == 3 {
            (-(l as i64)..=l as i64).collect()
        } else {
            (0..harmonic_dimension(dim, l) as i64).collect()
        };
        for order in orders {
            pairs.push(AngularEigenpair {
                index: 0,
                mu,
                psi: AngularVector::Harmonic {
                    dim,
                    terms: vec![(l, order, C64::new(1.0, 0.0))],
                },
                label: ModeLabel::Harmonic { degree: l, order },
            });
        }
    }
    sort_and_index(&mut pairs);
    pairs
}

/// Quotient ⟨Tψ, ψ⟩ / ‖ψ‖² of the angular quadratic form.
pub fn rayleigh_quotient(potential: &AngularPotential, psi: &AngularVector) -> Result<f64> {
    let norm = psi.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    match (potential, psi) {
        (AngularPotential::SphereConstant { dim, a }, AngularVector::Harmonic { dim: d, terms }) if dim == d => {
            let e: f64 = terms
                .iter()
                .map(|&(l, _, c)| c.norm_sqr() * ((l * (l + dim - 2)) as f64 - a))
                .sum();
            Ok(e / norm)
        }
        (AngularPotential::AharonovBohm { circulation }, AngularVector::Fourier { n_min, coeffs }) => {
            let e: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let d = (*n_min + i as i64) as f64 - circulation;
                    c.norm_sqr() * d * d
                })
                .sum();
            Ok(e / norm)
        }
        (AngularPotential::Fourier { a, tangential }, AngularVector::Fourier { n_min, coeffs }) => {
            let hi = n_min + coeffs.len() as i64 - 1;
            let m = assemble(a, tangential, *n_min, hi);
            let v = nalgebra::DVector::from_column_slice(coeffs);
            let e = (v.adjoint() * &m * &v)[(0, 0)];
            Ok(e.re / norm)
        }
        _ => Err(Error::invalid("psi", "angular vector does not match the potential's basis")),
    }
}

/// Point of S^{N−1} in the angles used by the bases.
fn angles(unit: &[f64]) -> (f64, f64) {
    match unit.len() {
        2 => (libm::atan2(unit[1], unit[0]), 0.0),
        _ => {
            let c = unit[2].clamp(-1.0, 1.0);
            (libm::acos(c), libm::atan2(unit[1], unit[0]))
        }
    }
}

/// Value and tangential gradients of an angular eigenfunction at a point of
/// the sphere. Gradients are components in an orthonormal tangent frame:
/// (∂_θ) for N = 2, (∂_θ, ∂_φ/sin θ) for N = 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularValue {
    pub value: C64,
    pub grad: [C64; 2],
    pub magnetic_grad: [C64; 2],
}

#[derive(Debug, Clone, PartialEq)]
enum Forms {
    Diagonal,
    Dense {
        plain: DMatrix<C64>,
        magnetic: DMatrix<C64>,
        a: DMatrix<C64>,
    },
}

/// A truncated angular spectrum with everything downstream modules need.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    dim: usize,
    potential: AngularPotential,
    pairs: Vec<AngularEigenpair>,
    forms: Forms,
}

impl AngularSpectrum {
    /// Builds the spectrum: |n| ≤ k_max for Aharonov–Bohm, degrees ≤ k_max for
    /// spheres, and the k_max lowest Galerkin eigenpairs for Fourier potentials.
    pub fn new(potential: AngularPotential, k_max: usize, n_basis: Option<usize>) -> Result<Self> {
        let pairs = match &potential {
            AngularPotential::AharonovBohm { circulation } => solve_ab(*circulation, k_max),
            AngularPotential::Fourier { a, tangential } => {
                let res = a.hermitian_residual().max(tangential.hermitian_residual());
                if res > 1e-10 {
                    return Err(Error::NonHermitian { residual: res });
                }
                solve_fourier(&potential, n_basis.unwrap_or(2 * k_max + 8), k_max)?
            }
            AngularPotential::SphereConstant { dim, a } => {
                if *dim < 3 {
                    return Err(Error::invalid("dimension", "sphere_constant needs N ≥ 3"));
                }
                solve_sphere_constant(*dim, *a, k_max)
            }
        };
        Self::from_pairs(potential, pairs)
    }

    pub fn from_pairs(potential: AngularPotential, pairs: Vec<AngularEigenpair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("k_max", "angular spectrum is empty"));
        }
        let forms = match &potential {
            AngularPotential::Fourier { a, tangential } => dense_forms(&pairs, a, tangential),
            _ => Forms::Diagonal,
        };
        Ok(AngularSpectrum {
            dim: potential.dim(),
            potential,
            pairs,
            forms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential(&self) -> &AngularPotential {
        &self.potential
    }

    pub fn pairs(&self) -> &[AngularEigenpair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Eigenpair k (1-based).
    pub fn pair(&self, k: usize) -> Result<&AngularEigenpair> {
        if k == 0 || k > self.pairs.len() {
            return Err(Error::IndexOutOfRange {
                what: "angular",
                index: k,
                available: self.pairs.len(),
            });
        }
        Ok(&self.pairs[k - 1])
    }

    pub fn mu(&self, k: usize) -> f64 {
        self.pairs[k - 1].mu
    }

    pub fn label(&self, k: usize) -> ModeLabel {
        self.pairs[k - 1].label
    }

    /// Index of the eigenpair carrying a label.
    pub fn find(&self, label: ModeLabel) -> Option<usize> {
        self.pairs.iter().position(|p| p.label == label).map(|i| i + 1)
    }

    pub fn hardy(&self) -> HardyCheck {
        check_hardy_condition(&self.pairs, self.dim)
    }

    pub fn require_hardy(&self) -> Result<()> {
        let h = self.hardy();
        if h.holds {
            Ok(())
        } else {
            Err(Error::HardyViolated { margin: h.margin })
        }
    }

    /// β₁ = sqrt(((N−2)/2)² + μ₁).
    pub fn beta1(&self) -> f64 {
        libm::sqrt(self.hardy().margin.max(0.0))
    }

    /// Angular forms are diagonal in the eigenbasis (AB and spheres).
    pub fn is_diagonal(&self) -> bool {
        matches!(self.forms, Forms::Diagonal)
    }

    /// ∫ ∇_S ψ_k · conj(∇_S ψ_j).
    pub fn plain_form(&self, k: usize, j: usize) -> C64 {
        match &self.forms {
            Forms::Dense { plain, .. } => plain[(k - 1, j - 1)],
            Forms::Diagonal => {
                if k != j {
                    return C64::new(0.0, 0.0);
                }
                C64::new(self.laplace_eigenvalue(k), 0.0)
            }
        }
    }

    /// ∫ (∇_S + iA)ψ_k · conj((∇_S + iA)ψ_j).
    pub fn magnetic_form(&self, k: usize, j: usize) -> C64 {
        match &self.forms {
            Forms::Dense { magnetic, .. } => magnetic[(k - 1, j - 1)],
            Forms::Diagonal => {
                if k != j {
                    return C64::new(0.0, 0.0);
                }
                match &self.potential {
                    AngularPotential::AharonovBohm { .. } => C64::new(self.pairs[k - 1].mu, 0.0),
                    _ => C64::new(self.laplace_eigenvalue(k), 0.0),
                }
            }
        }
    }

    /// ∫ a ψ_k conj(ψ_j).
    pub fn a_form(&self, k: usize, j: usize) -> C64 {
        match &self.forms {
            Forms::Dense { a, .. } => a[(k - 1, j - 1)],
            Forms::Diagonal => match &self.potential {
                AngularPotential::SphereConstant { a, .. } if k == j => C64::new(*a, 0.0),
                _ => C64::new(0.0, 0.0),
            },
        }
    }

    fn laplace_eigenvalue(&self, k: usize) -> f64 {
        match self.pairs[k - 1].label {
            ModeLabel::Wavenumber(n) => (n * n) as f64,
            ModeLabel::Harmonic { degree, .. } => (degree * (degree + self.dim - 2)) as f64,
        }
    }

    /// Pointwise evaluation is available for N = 2, N = 3 and degree-0 modes.
    pub fn supports_pointwise(&self, k: usize) -> bool {
        self.dim <= 3 || self.pairs[k - 1].label.degree() == Some(0)
    }

    pub fn psi(&self, k: usize, unit: &[f64]) -> Result<C64> {
        Ok(self.psi_with_gradient(k, unit)?.value)
    }

    pub fn psi_with_gradient(&self, k: usize, unit: &[f64]) -> Result<AngularValue> {
        let pair = self.pair(k)?;
        let zero = C64::new(0.0, 0.0);
        match &pair.psi {
            AngularVector::Fourier { n_min, coeffs } => {
                let (theta, _) = angles(unit);
                let norm = 1.0 / libm::sqrt(2.0 * PI);
                let step = C64::from_polar(1.0, theta);
                let mut e = C64::from_polar(norm, *n_min as f64 * theta);
                let mut value = zero;
                let mut d = zero;
                for (i, c) in coeffs.iter().enumerate() {
                    let n = (*n_min + i as i64) as f64;
                    value += c * e;
                    d += c * e * C64::new(0.0, n);
                    e *= step;
                }
                let at = self.potential.tangential_at(theta);
                Ok(AngularValue {
                    value,
                    grad: [d, zero],
                    magnetic_grad: [d + C64::new(0.0, at) * value, zero],
                })
            }
            AngularVector::Harmonic { dim, terms } => {
                if *dim == 3 {
                    let (theta, phi) = angles(unit);
                    let s = libm::sin(theta);
                    let mut value = zero;
                    let mut g = [zero, zero];
                    for &(l, m, c) in terms {
                        let (y, dt, dp) = real_spherical_harmonic(l, m, theta, phi);
                        value += c * y;
                        g[0] += c * dt;
                        if s > 0.0 {
                            g[1] += c * dp / s;
                        }
                    }
                    Ok(AngularValue {
                        value,
                        grad: g,
                        magnetic_grad: g,
                    })
                } else if terms.iter().all(|t| t.0 == 0) {
                    let value: C64 = terms.iter().map(|t| t.2).sum::<C64>() / libm::sqrt(sphere_area(*dim));
                    Ok(AngularValue {
                        value,
                        grad: [zero, zero],
                        magnetic_grad: [zero, zero],
                    })
                } else {
                    Err(Error::Unsupported(format!(
                        "pointwise spherical harmonics of positive degree need N = 3 (got N = {dim})"
                    )))
                }
            }
        }
    }
}

fn dense_forms(pairs: &[AngularEigenpair], a: &FourierSeries, tangential: &FourierSeries) -> Forms {
    let k = pairs.len();
    let vecs: Vec<(i64, &Vec<C64>)> = pairs
        .iter()
        .map(|p| match &p.psi {
            AngularVector::Fourier { n_min, coeffs } => (*n_min, coeffs),
            AngularVector::Harmonic { .. } => unreachable!("Fourier potential with harmonic eigenvector"),
        })
        .collect();
    let (n_min, len) = (vecs[0].0, vecs[0].1.len());
    let ma = tangential.max_wavenumber().max(a.max_wavenumber()) as i64;
    let lo = n_min - ma;
    let hi = n_min + len as i64 - 1 + ma;
    let ext = (hi - lo + 1) as usize;
    // Extended vectors of ψ_k, (∂ + iA)ψ_k / i, and aψ_k.
    let mut w = Vec::with_capacity(k);
    let mut av = Vec::with_capacity(k);
    for &(nm, v) in &vecs {
        let mut wk = vec![C64::new(0.0, 0.0); ext];
        let mut ak = vec![C64::new(0.0, 0.0); ext];
        for p in 0..ext {
            let np = lo + p as i64;
            for (q, c) in v.iter().enumerate() {
                let nq = nm + q as i64;
                let d = np - nq;
                if d.abs() > ma {
                    continue;
                }
                wk[p] += tangential.coeff(d) * c;
                ak[p] += a.coeff(d) * c;
                if d == 0 {
                    wk[p] += c * nq as f64;
                }
            }
        }
        w.push(wk);
        av.push(ak);
    }
    let dot = |x: &[C64], xo: i64, y: &[C64], yo: i64| -> C64 {
        x.iter()
            .enumerate()
            .map(|(i, c)| {
                let j = xo + i as i64 - yo;
                if j < 0 || j as usize >= y.len() {
                    C64::new(0.0, 0.0)
                } else {
                    c * y[j as usize].conj()
                }
            })
            .sum()
    };
    let plain = DMatrix::from_fn(k, k, |i, j| {
        let (ni, vi) = vecs[i];
        let (nj, vj) = vecs[j];
        let vi2: Vec<C64> = vi.iter().enumerate().map(|(q, c)| c * (((ni + q as i64) * (ni + q as i64)) as f64)).collect();
        dot(&vi2, ni, vj, nj)
    });
    let magnetic = DMatrix::from_fn(k, k, |i, j| dot(&w[i], lo, &w[j], lo));
    let af = DMatrix::from_fn(k, k, |i, j| dot(&av[i], lo, vecs[j].1, vecs[j].0));
    Forms::Dense {
        plain,
        magnetic,
        a: af,
    }
}
