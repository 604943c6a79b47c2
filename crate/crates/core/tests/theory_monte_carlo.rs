use l1cv::rng::rng_from_seed;
use l1cv::theory::abs_product_moment;
use rand::Rng;
use rand_distr::StandardNormal;

/// `E|XY|` at correlation 0.5 against 10^7 correlated normal pairs.
#[test]
fn abs_product_moment_matches_sampling() {
    let rho = 0.5f64;
    let c = (1.0 - rho * rho).sqrt();
    let mut rng = rng_from_seed(20240605);
    let n = 10_000_000usize;
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let v = (x * (rho * x + c * z)).abs();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    let closed = abs_product_moment(rho).unwrap();
    assert!((mean - closed).abs() < 3.0 * se, "MC {mean} +/- {se}, closed form {closed}");
}
