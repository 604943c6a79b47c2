//! Sparse signals, Gaussian sensing matrices and the mixed impulse/Gaussian
//! noise model.
//!
//! Measurement noise entry `i` is `n_i + B_i * G_i` where `n_i ~ N(0, sigma_n^2 / m)`,
//! `B_i` is `+1`/`-1` with probability `b/2` each and `0` otherwise, and
//! `G_i ~ N(mu_g, sigma_g^2)`. Impulse magnitudes are not clipped, so a negative
//! `G_i` is possible when `sigma_g` is large relative to `mu_g`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Ground-truth signal with a known support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    values: DVector<f64>,
    support: Vec<usize>,
}

impl SparseSignal {
    /// Builds a signal from dense values; the support is the set of nonzeros.
    pub fn from_values(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("signal length must be positive");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("signal contains non-finite values");
        }
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { values, support })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Sorted indices of the nonzero entries.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }
}

/// Dense `m x n` measurement operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix(DMatrix<f64>);

impl SensingMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return invalid("sensing matrix must have at least one row and column");
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return invalid("sensing matrix contains non-finite entries");
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        self.0.select_rows(rows.iter())
    }
}

/// Parameters of the impulse-plus-Gaussian noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// Probability that an entry carries an impulse.
    pub b: f64,
    /// Mean impulse magnitude.
    pub mu_g: f64,
    /// Standard deviation of the impulse magnitude.
    pub sigma_g: f64,
    /// Gaussian noise scale; entries have variance `sigma_n^2 / m`.
    pub sigma_n: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.b) {
            return invalid(format!("b must lie in [0, 1], got {}", self.b));
        }
        if !self.mu_g.is_finite() {
            return invalid("mu_g must be finite");
        }
        if !(self.sigma_g >= 0.0 && self.sigma_g.is_finite()) {
            return invalid(format!("sigma_g must be nonnegative, got {}", self.sigma_g));
        }
        if !(self.sigma_n >= 0.0 && self.sigma_n.is_finite()) {
            return invalid(format!("sigma_n must be nonnegative, got {}", self.sigma_n));
        }
        Ok(())
    }
}

/// One draw of the noise model, with the three component streams kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub gaussian: Vec<f64>,
    pub impulse_sign: Vec<i8>,
    pub impulse_mag: Vec<f64>,
}

impl NoiseRealization {
    pub fn len(&self) -> usize {
        self.gaussian.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussian.is_empty()
    }

    #[inline]
    pub fn total_at(&self, i: usize) -> f64 {
        self.gaussian[i] + f64::from(self.impulse_sign[i]) * self.impulse_mag[i]
    }

    pub fn total(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|i| self.total_at(i)))
    }

    pub fn impulse_count(&self) -> usize {
        self.impulse_sign.iter().filter(|s| **s != 0).count()
    }

    /// The realization restricted to `rows`, in order.
    pub fn select(&self, rows: &[usize]) -> NoiseRealization {
        NoiseRealization {
            gaussian: rows.iter().map(|&i| self.gaussian[i]).collect(),
            impulse_sign: rows.iter().map(|&i| self.impulse_sign[i]).collect(),
            impulse_mag: rows.iter().map(|&i| self.impulse_mag[i]).collect(),
        }
    }
}

/// Sensing matrix together with clean and noisy measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub matrix: SensingMatrix,
    pub clean: DVector<f64>,
    pub noisy: DVector<f64>,
    pub noise: NoiseRealization,
}

impl MeasurementSet {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }
}

/// Draws an `n`-vector with `s` nonzeros on a uniformly random support.
pub fn gen_sparse_signal(n: usize, s: usize, amp_sigma: f64, seed: u64) -> Result<SparseSignal> {
    if n == 0 || s == 0 {
        return invalid("signal length and sparsity must be positive");
    }
    if s > n {
        return invalid(format!("sparsity {s} exceeds signal length {n}"));
    }
    if !(amp_sigma > 0.0 && amp_sigma.is_finite()) {
        return invalid(format!("amplitude sigma must be positive, got {amp_sigma}"));
    }
    let mut rng = rng_from_seed(seed);
    let mut support = rand::seq::index::sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    let amp = Normal::new(0.0, amp_sigma).expect("validated sigma");
    let mut values = DVector::zeros(n);
    for &i in &support {
        // A draw of exactly zero would silently shrink the support.
        let mut v = amp.sample(&mut rng);
        while v == 0.0 {
            v = amp.sample(&mut rng);
        }
        values[i] = v;
    }
    Ok(SparseSignal { values, support })
}

/// Draws an `m x n` matrix with iid `N(0, 1/m)` entries.
pub fn gen_sensing_matrix(m: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    if m == 0 || n == 0 {
        return invalid("matrix dimensions must be positive");
    }
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let entries = DMatrix::from_fn(m, n, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        z * scale
    });
    Ok(SensingMatrix(entries))
}

/// Draws one noise realization of length `m`.
pub fn gen_noise(m: usize, params: &NoiseParams, seed: u64) -> Result<NoiseRealization> {
    gen_noise_rows(m, m, params, seed)
}

/// Draws `rows` noise entries for a system with `m` measurements in total, so
/// the Gaussian part keeps variance `sigma_n^2 / m` on a subset of rows.
pub fn gen_noise_rows(rows: usize, m: usize, params: &NoiseParams, seed: u64) -> Result<NoiseRealization> {
    if rows == 0 || m == 0 {
        return invalid("noise length must be positive");
    }
    params.validate()?;
    let mut gauss_rng = rng_from_seed(derive_seed(seed, &[1]));
    let mut sign_rng = rng_from_seed(derive_seed(seed, &[2]));
    let mut mag_rng = rng_from_seed(derive_seed(seed, &[3]));

    let g_scale = params.sigma_n / (m as f64).sqrt();
    let gaussian = (0..rows)
        .map(|_| g_scale * gauss_rng.sample::<f64, _>(StandardNormal))
        .collect();
    let half_b = 0.5 * params.b;
    let impulse_sign = (0..rows)
        .map(|_| {
            let u: f64 = sign_rng.random();
            if u < half_b {
                1
            } else if u < params.b {
                -1
            } else {
                0
            }
        })
        .collect();
    let impulse_mag = (0..rows)
        .map(|_| params.mu_g + params.sigma_g * mag_rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(NoiseRealization {
        gaussian,
        impulse_sign,
        impulse_mag,
    })
}

/// Forms `clean = Phi x` and `noisy = clean + noise`.
pub fn measure(
    signal: &SparseSignal,
    matrix: &SensingMatrix,
    noise: &NoiseRealization,
) -> Result<MeasurementSet> {
    if matrix.cols() != signal.len() {
        return invalid(format!(
            "matrix has {} columns but signal has length {}",
            matrix.cols(),
            signal.len()
        ));
    }
    if noise.len() != matrix.rows() {
        return invalid(format!(
            "noise has {} entries but matrix has {} rows",
            noise.len(),
            matrix.rows()
        ));
    }
    let clean = matrix.entries() * signal.values();
    let noisy = DVector::from_iterator(
        clean.len(),
        clean.iter().enumerate().map(|(i, c)| c + noise.total_at(i)),
    );
    Ok(MeasurementSet {
        matrix: matrix.clone(),
        clean,
        noisy,
        noise: noise.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse_noise(b: f64) -> NoiseParams {
        NoiseParams {
            b,
            mu_g: 700.0,
            sigma_g: 100.0,
            sigma_n: 0.5,
        }
    }

    #[test]
    fn signal_has_requested_sparsity() {
        let x = gen_sparse_signal(1200, 50, 10f64.sqrt(), 3).unwrap();
        assert_eq!(x.len(), 1200);
        assert_eq!(x.sparsity(), 50);
        assert_eq!(x.values().iter().filter(|v| **v != 0.0).count(), 50);
        for &i in x.support() {
            assert!(x.values()[i] != 0.0);
        }
    }

    #[test]
    fn fully_dense_signal() {
        let x = gen_sparse_signal(5, 5, 1.0, 11).unwrap();
        assert_eq!(x.support(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn signal_is_deterministic() {
        let a = gen_sparse_signal(10, 1, 1.0, 42).unwrap();
        let b = gen_sparse_signal(10, 1, 1.0, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_sparse_signal(10, 1, 1.0, 43).unwrap();
        assert!(a != c || a.support() == c.support());
    }

    #[test]
    fn sparsity_above_length_is_rejected() {
        assert!(gen_sparse_signal(4, 5, 1.0, 0).is_err());
    }

    #[test]
    fn matrix_shape_and_variance() {
        let a = gen_sensing_matrix(420, 1200, 1).unwrap();
        assert_eq!((a.rows(), a.cols()), (420, 1200));

        let col = gen_sensing_matrix(10_000, 1, 2).unwrap();
        let n = col.rows() as f64;
        let mean = col.entries().iter().sum::<f64>() / n;
        let var = col.entries().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1e-4).abs() < 0.05 * 1e-4, "sample variance {var}");

        let single = gen_sensing_matrix(1, 1, 3).unwrap();
        assert_eq!(single.entries().len(), 1);
    }

    #[test]
    fn matrix_mean_is_centred() {
        let (m, n) = (200usize, 300usize);
        let a = gen_sensing_matrix(m, n, 9).unwrap();
        let mean = a.entries().iter().sum::<f64>() / (m * n) as f64;
        let se = 1.0 / ((m * n * m) as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} vs se {se}");
    }

    #[test]
    fn noise_without_sources_is_zero() {
        let p = NoiseParams {
            b: 0.0,
            mu_g: 700.0,
            sigma_g: 100.0,
            sigma_n: 0.0,
        };
        let n = gen_noise(100, &p, 5).unwrap();
        assert!(n.total().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_frequency_concentrates() {
        let n = gen_noise(100_000, &impulse_noise(0.1), 8).unwrap();
        let frac = n.impulse_count() as f64 / 1e5;
        assert!((frac - 0.1).abs() < 0.01, "fraction {frac}");
        let bound = 3.0 * (0.1f64 * 0.9 / 1e5).sqrt();
        assert!((frac - 0.1).abs() < bound, "fraction {frac}");
        let plus = n.impulse_sign.iter().filter(|s| **s == 1).count() as f64;
        let minus = n.impulse_sign.iter().filter(|s| **s == -1).count() as f64;
        assert!((plus - minus).abs() < 4.0 * (plus + minus).sqrt());
    }

    #[test]
    fn impulse_extremes() {
        let pure = gen_noise(500, &impulse_noise(0.0), 1).unwrap();
        assert_eq!(pure.impulse_count(), 0);
        for i in 0..pure.len() {
            assert_eq!(pure.total_at(i), pure.gaussian[i]);
        }
        let all = gen_noise(500, &impulse_noise(1.0), 1).unwrap();
        assert_eq!(all.impulse_count(), 500);
    }

    #[test]
    fn impulse_rate_over_many_draws() {
        let count: usize = (0..50)
            .map(|k| gen_noise(420, &impulse_noise(0.02), k).unwrap().impulse_count())
            .sum();
        let frac = count as f64 / (50.0 * 420.0);
        assert!((frac - 0.02).abs() < 0.005, "fraction {frac}");
    }

    #[test]
    fn invalid_noise_params() {
        let mut p = impulse_noise(0.1);
        p.b = 1.5;
        assert!(gen_noise(10, &p, 0).is_err());
        p.b = 0.1;
        p.sigma_n = -1.0;
        assert!(gen_noise(10, &p, 0).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_composed() {
        let a = gen_noise(64, &impulse_noise(0.3), 77).unwrap();
        let b = gen_noise(64, &impulse_noise(0.3), 77).unwrap();
        assert_eq!(a, b);
        let t = a.total();
        for i in 0..64 {
            assert_eq!(t[i], a.gaussian[i] + f64::from(a.impulse_sign[i]) * a.impulse_mag[i]);
        }
    }

    #[test]
    fn scalar_measurement() {
        let x = SparseSignal::from_values(DVector::from_vec(vec![2.0])).unwrap();
        let a = SensingMatrix::new(DMatrix::from_element(1, 1, 3.0)).unwrap();
        let noise = NoiseRealization {
            gaussian: vec![1.0],
            impulse_sign: vec![0],
            impulse_mag: vec![500.0],
        };
        let y = measure(&x, &a, &noise).unwrap();
        assert_eq!(y.noisy[0], 7.0);
        assert_eq!(y.clean[0], 6.0);
    }

    #[test]
    fn zero_signal_zero_noise() {
        let x = SparseSignal::from_values(DVector::zeros(8)).unwrap();
        let a = gen_sensing_matrix(4, 8, 0).unwrap();
        let p = NoiseParams {
            b: 0.0,
            mu_g: 0.0,
            sigma_g: 0.0,
            sigma_n: 0.0,
        };
        let noise = gen_noise(4, &p, 0).unwrap();
        let y = measure(&x, &a, &noise).unwrap();
        assert!(y.noisy.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn measurement_dimension_mismatch() {
        let x = gen_sparse_signal(10, 2, 1.0, 0).unwrap();
        let a = gen_sensing_matrix(4, 9, 0).unwrap();
        let noise = gen_noise(4, &impulse_noise(0.1), 0).unwrap();
        assert!(measure(&x, &a, &noise).is_err());
        let a = gen_sensing_matrix(5, 10, 0).unwrap();
        assert!(measure(&x, &a, &noise).is_err());
    }

    #[test]
    fn fig3_configuration_measures() {
        let x = gen_sparse_signal(1200, 50, 10f64.sqrt(), 1).unwrap();
        let a = gen_sensing_matrix(800, 1200, 2).unwrap();
        let noise = gen_noise(800, &impulse_noise(0.1), 3).unwrap();
        let y = measure(&x, &a, &noise).unwrap();
        let t = noise.total();
        for i in 0..800 {
            assert!((y.noisy[i] - y.clean[i] - t[i]).abs() <= 1e-12 * (1.0 + y.noisy[i].abs()));
        }
    }
}
