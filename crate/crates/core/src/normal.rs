//! Standard normal distribution primitives.

use libm::erfc;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Density of the standard normal distribution.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail `1 - Φ(x)` computed without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    if x >= 0.0 {
        upper_tail(x)
    } else {
        1.0 - upper_tail(-x)
    }
}

/// Cumulative distribution function `Φ(x)`.
///
/// Both halves are built from the same upper-tail evaluation, so
/// `Φ(-x) = 1 - Φ(x)` up to the single rounding of the subtraction.
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        upper_tail(-x)
    } else {
        1.0 - upper_tail(x)
    }
}

fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}
