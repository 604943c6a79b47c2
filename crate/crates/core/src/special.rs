//! Gaussian special functions on top of `libm`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// CDF of `N(mean, variance)`; a point mass when the variance is zero.
pub fn gaussian_cdf(x: f64, mean: f64, variance: f64) -> f64 {
    if variance == 0.0 {
        return if x < mean { 0.0 } else { 1.0 };
    }
    normal_cdf((x - mean) / variance.sqrt())
}

/// `sqrt(2 / pi)`, the mean of a half-normal with unit scale.
pub fn sqrt_2_over_pi() -> f64 {
    (2.0 / PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Tabulated normal quantiles.
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-14);
        assert!((normal_cdf(-2.326347874040841) - 0.01).abs() < 1e-14);
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((erf(3.0 / 2f64.sqrt()) - 0.9973002039367398).abs() < 1e-14);
    }

    #[test]
    fn tails_keep_relative_accuracy() {
        // erfc-based evaluation avoids cancellation in the lower tail.
        let p = normal_cdf(-10.0);
        assert!((p / 7.619853024160527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cdf_is_a_step() {
        assert_eq!(gaussian_cdf(0.9, 1.0, 0.0), 0.0);
        assert_eq!(gaussian_cdf(1.0, 1.0, 0.0), 1.0);
        assert!((gaussian_cdf(3.0, 1.0, 4.0) - normal_cdf(1.0)).abs() < 1e-15);
    }
}
