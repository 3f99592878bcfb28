//! Bessel J₁ and the Airy pattern function.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// First positive zero of J₁.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512_3;

/// Abscissa where `airy_kernel` falls to one half.
pub const AIRY_HALF_MAX: f64 = 1.616_339_948_310_703;

// Below this the ascending series is used; the cancellation loss at 12 is
// about four digits, and the asymptotic remainder above it is ~1e-11.
const SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind of order one.
pub fn bessel_j1(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j1 of non-finite {x}")));
    }
    Ok(j1(x))
}

/// |2J₁(x)/x|², equal to exactly 1 at x = 0.
pub fn airy_kernel(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("airy_kernel of non-finite {x}")));
    }
    Ok(airy(x))
}

pub(crate) fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        j1_series(ax)
    } else {
        j1_asymptotic(ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

pub(crate) fn airy(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let amp = 2.0 * j1(x) / x;
    (amp * amp).min(1.0)
}

/// sin(x)/x with the removable singularity filled.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Σ (−1)^k (x/2)^{2k+1} / (k!(k+1)!).
fn j1_series(x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half;
    let mut sum = term;
    for k in 0..80 {
        let kf = k as f64;
        term *= -q / ((kf + 1.0) * (kf + 2.0));
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-2 * sum.abs() {
            break;
        }
    }
    sum
}

/// Hankel expansion, truncated at the smallest term.
fn j1_asymptotic(x: f64) -> f64 {
    const MU: f64 = 4.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (MU - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        // a_k/x^k enters P for even k and Q for odd k, alternating in sign
        // within each series.
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - 3.0 * FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
