use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Phi(x)`, accurate deep into the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Mills-ratio sandwich
/// `phi(x) / (1 + x) <= 1 - Phi(x) <= phi(x) / x` for `x > 1`.
pub fn normal_tail_bounds(x: f64) -> Result<(f64, f64)> {
    if !(x > 1.0) {
        return Err(invalid(format!("normal tail bounds need x > 1, got {x}")));
    }
    let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    Ok((phi / (1.0 + x), phi / x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_sf(2.0) - 0.022_750_131_948_179_2).abs() < 1e-17);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-16);
    }

    #[test]
    fn bounds_at_two() {
        let (lo, hi) = normal_tail_bounds(2.0).unwrap();
        assert!((lo - 0.017_996).abs() < 1e-5);
        assert!((hi - 0.026_995).abs() < 1e-5);
        assert!(normal_tail_bounds(1.0).is_err());
    }
}
