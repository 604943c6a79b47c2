//! Summary statistics and goodness-of-fit tests used by the harness.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::theory::GaussianApprox;

/// Below this many samples the asymptotic KS threshold is not meaningful.
pub const KS_MIN_SAMPLES: usize = 1000;

/// Sample mean with its standard error; the error is `None` below two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub std_error: Option<f64>,
    pub n: usize,
}

/// Mean and standard error by a sequential fold, so the result depends only
/// on the order of `values`.
pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            std_error: None,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64 / n as f64).sqrt()
    });
    MeanSe { mean, std_error, n }
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of
/// `samples` and a Gaussian.
pub fn ks_statistic(samples: &[f64], dist: &GaussianApprox) -> Result<f64> {
    if samples.is_empty() {
        return invalid("KS statistic needs at least one sample");
    }
    if !(dist.variance > 0.0) {
        return invalid("KS statistic needs a Gaussian with positive variance");
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return invalid("samples contain non-finite values");
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = dist.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic 99% critical value of the one-sample KS statistic.
pub fn ks_critical_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`, summed in log space.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let total: f64 = (0..=k).map(|j| (ln_choose(n, j) + j as f64 * lp + (n - j) as f64 * lq).exp()).sum();
    total.min(1.0)
}

/// Central interval of success counts holding probability at least `level`
/// under `Binomial(n, p)`: the `(1-level)/2` and `(1+level)/2` quantiles.
pub fn binomial_interval(n: u64, p: f64, level: f64) -> (u64, u64) {
    if p <= 0.0 {
        return (0, 0);
    }
    if p >= 1.0 {
        return (n, n);
    }
    let tail = (1.0 - level) / 2.0;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut cum = 0.0;
    let mut lo = None;
    for j in 0..=n {
        cum += (ln_choose(n, j) + j as f64 * lp + (n - j) as f64 * lq).exp();
        if lo.is_none() && cum >= tail {
            lo = Some(j);
        }
        if cum >= 1.0 - tail {
            return (lo.unwrap_or(j), j);
        }
    }
    (lo.unwrap_or(n), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_by_hand() {
        let s = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // Sample variance 5/3, divided by n = 4.
        assert!((s.std_error.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]).std_error, None);
        assert!(mean_se(&[]).mean.is_nan());
    }

    #[test]
    fn ks_single_sample_at_median() {
        let g = GaussianApprox { mean: 3.0, variance: 4.0 };
        assert_eq!(ks_statistic(&[3.0], &g).unwrap(), 0.5);
    }

    #[test]
    fn ks_constant_samples_mismatch() {
        let g = GaussianApprox { mean: 0.0, variance: 1.0 };
        for c in [-1.0, 0.0, 2.0] {
            assert!(ks_statistic(&[c; 50], &g).unwrap() >= 0.5);
        }
        assert!(ks_statistic(&[], &g).is_err());
        assert!(ks_statistic(&[1.0], &GaussianApprox { mean: 0.0, variance: 0.0 }).is_err());
    }

    #[test]
    fn binomial_small_cases() {
        // n = 2, p = 0.5: P(0) = 1/4, P(<=1) = 3/4.
        assert!((binomial_cdf(0, 2, 0.5) - 0.25).abs() < 1e-14);
        assert!((binomial_cdf(1, 2, 0.5) - 0.75).abs() < 1e-14);
        assert_eq!(binomial_cdf(2, 2, 0.5), 1.0);
        assert_eq!(binomial_interval(100, 1.0, 0.99), (100, 100));
        assert_eq!(binomial_interval(100, 0.0, 0.99), (0, 0));
        let (lo, hi) = binomial_interval(1000, 0.5, 0.99);
        // Normal approximation: 500 -/+ 2.576 * 15.81.
        assert!((458..=461).contains(&lo) && (539..=542).contains(&hi), "{lo} {hi}");
    }
}
