//! Special functions: log-gamma helpers, Laguerre and Gegenbauer polynomials,
//! exponentially scaled modified Bessel functions, real spherical harmonics.

use core::f64::consts::PI;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// ln |(x)_i| and its sign for the rising factorial (x)_i = x(x+1)…(x+i−1).
pub fn ln_pochhammer(x: f64, i: usize) -> (f64, f64) {
    let mut ln = 0.0;
    let mut sign = 1.0;
    for j in 0..i {
        let f = x + j as f64;
        if f == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if f < 0.0 {
            sign = -sign;
        }
        ln += libm::log(f.abs());
    }
    (ln, sign)
}

/// Generalised binomial coefficient binom(x, m) for x − m > −1.
pub fn binomial(x: f64, m: usize) -> f64 {
    let mf = m as f64;
    libm::exp(ln_gamma(x + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(x - mf + 1.0))
}

/// Surface area of the unit sphere S^{N−1}.
pub fn sphere_area(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    2.0 * libm::pow(PI, h) / gamma(h)
}

/// Generalised Laguerre polynomial L_m^a(x) by the three-term recurrence.
pub fn laguerre(m: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// L_m^a(x) together with its x-derivative −L_{m−1}^{a+1}(x).
pub fn laguerre_with_derivative(m: usize, a: f64, x: f64) -> (f64, f64) {
    let d = if m == 0 { 0.0 } else { -laguerre(m - 1, a + 1.0, x) };
    (laguerre(m, a, x), d)
}

/// Gegenbauer polynomial C_l^λ(x), λ > 0.
pub fn gegenbauer(l: usize, lambda: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if l == 0 {
        return prev;
    }
    let mut cur = 2.0 * lambda * x;
    for n in 2..=l {
        let nf = n as f64;
        let next = (2.0 * x * (nf + lambda - 1.0) * cur - (nf + 2.0 * lambda - 2.0) * prev) / nf;
        prev = cur;
        cur = next;
    }
    cur
}

/// Σ_m Y_lm(x̂) conj(Y_lm(ŷ)) over an orthonormal basis of degree-l harmonics on
/// S^{N−1}, as a function of c = x̂·ŷ (addition theorem).
pub fn zonal_harmonic(dim: usize, l: usize, c: f64) -> f64 {
    let lambda = (dim as f64 - 2.0) / 2.0;
    let lf = l as f64;
    (lf + lambda) / lambda * gegenbauer(l, lambda, c) / sphere_area(dim)
}

/// Number of linearly independent degree-l spherical harmonics on S^{N−1}.
pub fn harmonic_dimension(dim: usize, l: usize) -> usize {
    if l == 0 {
        return 1;
    }
    let b = |n: usize, k: usize| -> usize {
        let mut r: u128 = 1;
        for i in 0..k {
            r = r * (n - i) as u128 / (i as u128 + 1);
        }
        r as usize
    };
    b(l + dim - 1, dim - 1) - b(l + dim - 3, dim - 1)
}

const SERIES_SWITCH: f64 = 30.0;

/// e^{−z} I_ν(z) for ν ≥ 0, z ≥ 0.
///
/// Power series summed relative to its first term for z ≤ 30. Above that, the
/// ratio I_ν/I_{ν−1} comes from the continued fraction and Miller's downward
/// recurrence carries it to ν₀ = ν − ⌊ν⌋, where the Hankel expansion is exact
/// to double precision.
pub fn bessel_i_scaled(nu: f64, z: f64) -> f64 {
    debug_assert!(nu >= 0.0 && z >= 0.0);
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if z <= SERIES_SWITCH {
        bessel_i_series_scaled(nu, z)
    } else {
        bessel_i_large_scaled(nu, z)
    }
}

/// Defining power series, scaled by e^{−z}. All terms are positive, so the
/// relative accuracy is that of the summation for any z that does not overflow.
pub fn bessel_i_series_scaled(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * (m + nu));
        sum += term;
        if term < 1e-17 * sum && m > 0.5 * z {
            break;
        }
    }
    let log_first = nu * libm::log(0.5 * z) - ln_gamma(nu + 1.0) - z;
    libm::exp(log_first + libm::log(sum))
}

/// Hankel asymptotic series for e^{−z} I_ν(z), summed to its smallest term.
pub fn bessel_i_hankel_scaled(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (k * 8.0 * z);
        if next.abs() >= term.abs() || k > 200.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum / libm::sqrt(2.0 * PI * z)
}

fn bessel_i_large_scaled(nu: f64, z: f64) -> f64 {
    let n = libm::floor(nu) as usize;
    let nu0 = nu - n as f64;
    let base = bessel_i_hankel_scaled(nu0, z);
    if n == 0 {
        return base;
    }
    // I_ν / I_{ν−1} by modified Lentz on 1/(2ν/z + 1/(2(ν+1)/z + …)).
    let tiny = 1e-300;
    let mut f = tiny;
    let mut c = f;
    let mut d = 0.0;
    let mut j = 0.0;
    loop {
        let b = 2.0 * (nu + j) / z;
        d += b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + 1.0 / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        j += 1.0;
        if (delta - 1.0).abs() < 1e-16 || j > 100_000.0 {
            break;
        }
    }
    let ratio = f;
    // Downward recurrence I_{j−1} = I_{j+1} + (2j/z) I_j from (I_ν, I_{ν−1}) = (ratio, 1).
    let mut upper = ratio;
    let mut lower = 1.0;
    let mut log_scale = 0.0;
    let mut order = nu - 1.0;
    while order > nu0 + 0.5 {
        let next = upper + 2.0 * order / z * lower;
        upper = lower;
        lower = next;
        if lower > 1e250 {
            upper /= 1e250;
            lower /= 1e250;
            log_scale += libm::log(1e250);
        }
        order -= 1.0;
    }
    // Now `lower` ∝ I_{ν0}; the starting value was I_ν ∝ ratio.
    libm::exp(libm::log(base) + libm::log(ratio) - libm::log(lower) - log_scale)
}

/// Real orthonormal spherical harmonic on S² in polar angle θ and azimuth φ,
/// with m < 0 denoting the sine branch. Returns (Y, ∂_θ Y, ∂_φ Y).
pub fn real_spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> (f64, f64, f64) {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "harmonic order exceeds degree");
    let x = libm::cos(theta);
    let s = libm::sin(theta);
    // Normalised associated Legendre functions P̄_j^{am}, j = am..=l.
    let mut pmm = 1.0 / libm::sqrt(4.0 * PI);
    for k in 1..=am {
        let kf = k as f64;
        pmm *= -libm::sqrt((2.0 * kf + 1.0) / (2.0 * kf)) * s;
    }
    let (p_l, p_lm1) = if l == am {
        (pmm, 0.0)
    } else {
        let mut prev = pmm;
        let mut cur = libm::sqrt(2.0 * am as f64 + 3.0) * x * pmm;
        for j in (am + 2)..=l {
            let jf = j as f64;
            let mf = am as f64;
            let a = libm::sqrt((4.0 * jf * jf - 1.0) / (jf * jf - mf * mf));
            let b = libm::sqrt(((jf - 1.0) * (jf - 1.0) - mf * mf) / (4.0 * (jf - 1.0) * (jf - 1.0) - 1.0));
            let next = a * (x * cur - b * prev);
            prev = cur;
            cur = next;
        }
        (cur, prev)
    };
    let lf = l as f64;
    let mf = am as f64;
    let dp = if s.abs() < 1e-300 {
        0.0
    } else {
        let c = if l > am {
            libm::sqrt((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0))
        } else {
            0.0
        };
        (lf * x * p_l - c * p_lm1) / s
    };
    let (ang, dang) = match m.cmp(&0) {
        core::cmp::Ordering::Equal => (1.0, 0.0),
        core::cmp::Ordering::Greater => {
            let r = core::f64::consts::SQRT_2;
            (r * libm::cos(mf * phi), -r * mf * libm::sin(mf * phi))
        }
        core::cmp::Ordering::Less => {
            let r = core::f64::consts::SQRT_2;
            (r * libm::sin(mf * phi), r * mf * libm::cos(mf * phi))
        }
    };
    (p_l * ang, dp * ang, p_l * dang)
}
