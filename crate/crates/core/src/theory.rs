//! Closed-form distributions of the l1 holdout error under impulse noise.
//!
//! Everything here assumes the impulse mean dominates the other scales
//! (`mu_g >> sigma_g, sigma_n, eps_x`) and that the holdout is large enough for
//! a central-limit approximation. Evaluations that leave that regime in a
//! detectable way (negative variance, an interval with a flipped denominator)
//! return [`Error::Regime`] rather than a clamped number.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::NoiseParams;
use crate::special::{erf, gaussian_cdf, normal_cdf, sqrt_2_over_pi};

/// Relative slack for rounding in variance assembly and correlation bounds.
const ROUNDING_SLACK: f64 = 1e-12;

/// Noise and dimension parameters entering the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub b: f64,
    pub mu_g: f64,
    pub sigma_g: f64,
    pub sigma_n: f64,
    /// Total number of measurements; sensing entries have variance `1/m`.
    pub m: usize,
    pub m_cv: usize,
}

impl TheoryParams {
    pub fn new(noise: &NoiseParams, m: usize, m_cv: usize) -> Result<Self> {
        let p = Self {
            b: noise.b,
            mu_g: noise.mu_g,
            sigma_g: noise.sigma_g,
            sigma_n: noise.sigma_n,
            m,
            m_cv,
        };
        p.validate()?;
        Ok(p)
    }

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
        if self.m == 0 || self.m_cv == 0 {
            return invalid("m and m_cv must be positive");
        }
        if self.m_cv > self.m {
            return invalid(format!("m_cv = {} exceeds m = {}", self.m_cv, self.m));
        }
        Ok(())
    }

    /// Per-row variance of the non-impulse residual spread, `1 - (1-b)^2 (2/pi)`.
    pub fn k1(&self) -> f64 {
        1.0 - (1.0 - self.b).powi(2) * 2.0 / PI
    }

    /// Per-row impulse variance, `b (sigma_g^2 + (1-b) mu_g^2)`.
    pub fn k2(&self) -> f64 {
        self.b * (self.sigma_g.powi(2) + (1.0 - self.b) * self.mu_g.powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianApprox {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianApprox {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gaussian_cdf(x, self.mean, self.variance)
    }
}

/// Sums signed terms into a variance, tolerating rounding below zero but not
/// a genuinely negative total.
fn assemble_variance(terms: &[f64], what: &str) -> Result<f64> {
    let total: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if total >= 0.0 {
        Ok(total)
    } else if -total <= ROUNDING_SLACK * scale {
        Ok(0.0)
    } else {
        Err(Error::Regime {
            reason: format!("{what} variance is negative ({total:.6e}); the impulse mean does not dominate"),
            min_m_cv: None,
        })
    }
}

/// `E|Z|` for `Z ~ N(mu, sigma^2)`.
pub fn folded_gaussian_mean(mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) || !mu.is_finite() {
        return invalid(format!("folded mean needs finite mu and sigma >= 0, got ({mu}, {sigma})"));
    }
    if sigma == 0.0 {
        return Ok(mu.abs());
    }
    Ok(sigma * sqrt_2_over_pi() * (-mu * mu / (2.0 * sigma * sigma)).exp() - mu * (1.0 - 2.0 * normal_cdf(mu / sigma)))
}

/// Distribution of the l1 holdout error of an estimate with recovery error `eps_x`.
pub fn lemma1_distribution(eps_x: f64, p: &TheoryParams) -> Result<GaussianApprox> {
    p.validate()?;
    if !(eps_x >= 0.0 && eps_x.is_finite()) {
        return invalid(format!("eps_x must be nonnegative, got {eps_x}"));
    }
    let (b, m, m_cv) = (p.b, p.m as f64, p.m_cv as f64);
    let spread = eps_x * eps_x + p.sigma_n * p.sigma_n;
    let folded = (2.0 / (m * PI) * spread).sqrt();
    let mean = b * m_cv * p.mu_g + (1.0 - b) * m_cv * folded;
    let variance = assemble_variance(
        &[
            m_cv * p.k1() * spread / m,
            m_cv * p.k2(),
            -m_cv * 2.0 * b * (1.0 - b) * p.mu_g * folded,
        ],
        "holdout error",
    )?;
    Ok(GaussianApprox { mean, variance })
}

/// Two-sided bound on `sqrt(eps_x^2 + sigma_n^2)` from an observed l1 holdout error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// `erf(rho / sqrt 2)`.
    pub confidence: f64,
    pub rho: f64,
    /// Lower bound before clamping at zero.
    pub lower_unclamped: f64,
    pub lower_clamped: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower_unclamped
    }
}

struct Theorem1Terms {
    scale: f64,
    p_plus: f64,
    p_minus: f64,
    h_plus: f64,
    h_minus: f64,
}

fn theorem1_terms(eps_cv: f64, rho: f64, p: &TheoryParams) -> Result<Theorem1Terms> {
    p.validate()?;
    if !(eps_cv >= 0.0 && eps_cv.is_finite()) {
        return invalid(format!("eps_cv must be nonnegative, got {eps_cv}"));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return invalid(format!("rho must be nonnegative, got {rho}"));
    }
    let (b, m_cv) = (p.b, p.m_cv as f64);
    let base = (1.0 - b) * sqrt_2_over_pi();
    let spread = rho * (p.k1() / m_cv).sqrt();
    let h_minus = base - spread;
    if h_minus <= 0.0 {
        // h(rho,-) > 0 iff m_cv > rho^2 K1 / base^2.
        let min_m_cv = (base > 0.0).then(|| (rho * rho * p.k1() / (base * base)).floor() as usize + 1);
        return Err(Error::Regime {
            reason: format!("interval denominator is not positive at m_cv = {}", p.m_cv),
            min_m_cv,
        });
    }
    let impulse = rho * (m_cv * p.k2()).sqrt();
    Ok(Theorem1Terms {
        scale: (p.m as f64).sqrt() / m_cv,
        p_plus: m_cv * b * p.mu_g + impulse,
        p_minus: m_cv * b * p.mu_g - impulse,
        h_plus: base + spread,
        h_minus,
    })
}

/// Interval holding with probability `erf(rho / sqrt 2)`.
pub fn theorem1_interval(eps_cv: f64, rho: f64, p: &TheoryParams) -> Result<ConfidenceInterval> {
    if rho <= 0.0 {
        return invalid(format!("rho must be positive, got {rho}"));
    }
    let t = theorem1_terms(eps_cv, rho, p)?;
    let lower_unclamped = t.scale * (eps_cv - t.p_plus) / t.h_plus;
    let upper = t.scale * (eps_cv - t.p_minus) / t.h_minus;
    Ok(ConfidenceInterval {
        lower: lower_unclamped.max(0.0),
        upper,
        confidence: erf(rho / std::f64::consts::SQRT_2),
        rho,
        lower_unclamped,
        lower_clamped: lower_unclamped < 0.0,
    })
}

/// Width of the interval, evaluated from its closed form rather than as a
/// difference of the two bounds.
pub fn theorem1_width(eps_cv: f64, rho: f64, p: &TheoryParams) -> Result<f64> {
    let t = theorem1_terms(eps_cv, rho, p)?;
    let num = eps_cv * (t.h_plus - t.h_minus) + t.p_plus * t.h_minus - t.p_minus * t.h_plus;
    Ok(t.scale * num / (t.h_minus * t.h_plus))
}

/// Recovery errors of two estimates and the inner product of their error vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairErrors {
    pub eps_p: f64,
    pub eps_q: f64,
    pub inner_pq: f64,
}

impl PairErrors {
    pub fn new(eps_p: f64, eps_q: f64, inner_pq: f64) -> Result<Self> {
        if !(eps_p >= 0.0 && eps_q >= 0.0 && eps_p.is_finite() && eps_q.is_finite() && inner_pq.is_finite()) {
            return invalid("pair errors must be finite with nonnegative norms");
        }
        if inner_pq.abs() > eps_p * eps_q * (1.0 + ROUNDING_SLACK) {
            return invalid(format!("|<dx_p, dx_q>| = {} exceeds eps_p * eps_q = {}", inner_pq.abs(), eps_p * eps_q));
        }
        Ok(Self { eps_p, eps_q, inner_pq })
    }

    /// Errors of two estimates of `signal`.
    pub fn from_estimates(signal: &DVector<f64>, xp: &DVector<f64>, xq: &DVector<f64>) -> Result<Self> {
        if xp.len() != signal.len() || xq.len() != signal.len() {
            return invalid("estimates must match the signal length");
        }
        let dp = signal - xp;
        let dq = signal - xq;
        let (eps_p, eps_q) = (dp.norm(), dq.norm());
        // Clip rounding past Cauchy-Schwarz so identical estimates stay valid.
        let inner = dp.dot(&dq).clamp(-eps_p * eps_q, eps_p * eps_q);
        Self::new(eps_p, eps_q, inner)
    }
}

/// `E|X Y|` for standard normals with correlation `rho`.
pub fn abs_product_moment(rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return invalid(format!("correlation must lie in [-1, 1], got {rho}"));
    }
    let r = rho.abs();
    if r == 0.0 {
        return Ok(2.0 / PI);
    }
    let c = (1.0 - r * r).sqrt();
    Ok(r - 2.0 * r * (c / r).atan() / PI + 2.0 * c / PI)
}

/// Distribution of `eps_cv^p - eps_cv^q` for two estimates scored on the same holdout.
///
/// The cross moment enters as the dimensionless `E|X'Y'|` scaled once by
/// `sigma_p sigma_q`, and both recovery errors appear in the impulse term.
pub fn lemma2_distribution(pair: &PairErrors, p: &TheoryParams) -> Result<GaussianApprox> {
    p.validate()?;
    let (b, m, m_cv) = (p.b, p.m as f64, p.m_cv as f64);
    let k1 = sqrt_2_over_pi();
    let sn2 = p.sigma_n * p.sigma_n;
    let sigma_p = ((pair.eps_p.powi(2) + sn2) / m).sqrt();
    let sigma_q = ((pair.eps_q.powi(2) + sn2) / m).sqrt();
    let cross = if sigma_p * sigma_q == 0.0 {
        0.0
    } else {
        let mut rho2 = (sn2 + pair.inner_pq) / (m * sigma_p * sigma_q);
        if rho2.abs() > 1.0 {
            if rho2.abs() > 1.0 + ROUNDING_SLACK {
                return invalid(format!("implied correlation {rho2} lies outside [-1, 1]"));
            }
            rho2 = rho2.signum();
        }
        abs_product_moment(rho2)? * sigma_p * sigma_q
    };
    let mean_row = (1.0 - b) * k1 * (sigma_p - sigma_q);
    let variance = assemble_variance(
        &[
            (1.0 - b) * m_cv * (sigma_p * sigma_p + sigma_q * sigma_q),
            -(1.0 - b) * m_cv * 2.0 * cross,
            m_cv * b / m * (pair.eps_p.powi(2) + pair.eps_q.powi(2)),
            -2.0 * b * m_cv / m * pair.inner_pq,
            -m_cv * mean_row * mean_row,
        ],
        "holdout error difference",
    )?;
    Ok(GaussianApprox {
        mean: m_cv * mean_row,
        variance,
    })
}

/// Probability that the estimate with the larger recovery error also has the
/// larger l1 holdout error, `Phi(mu / sigma)`. A degenerate difference
/// (`sigma = 0`) gives 0.5 when `mu = 0` and 0 or 1 by the sign of `mu`.
pub fn theorem2_probability(pair: &PairErrors, p: &TheoryParams) -> Result<f64> {
    let d = lemma2_distribution(pair, p)?;
    if d.variance == 0.0 {
        return Ok(match d.mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        });
    }
    Ok(normal_cdf(d.mean / d.std_dev()))
}
