//! Weibull lifetime model.
//!
//! Robot lifetimes follow a Weibull distribution with scale `lambda`
//! (characteristic lifetime, in ticks) and shape `k`:
//!
//! ```text
//! F(t) = 1 - exp(-(t/lambda)^k)          failure CDF
//! h(t) = (k/lambda) (t/lambda)^(k-1)      hazard rate
//! S(t) = exp(-(t/lambda)^k)               survival
//! ```
//!
//! Lifetimes are drawn once per robot at mission start by inverse transform,
//! `t = lambda (-ln(1-u))^(1/k)`.

use rand::distributions::{Distribution, Open01};
use rand::Rng;
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FailureError {
    #[error("invalid Weibull parameters lambda={lambda}, k={k}: both must be positive and finite")]
    InvalidParams { lambda: f64, k: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("uniform variate must lie in (0, 1), got {0}")]
    UniformOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeibullParams {
    lambda: f64,
    k: f64,
}

impl WeibullParams {
    pub fn new(lambda: f64, k: f64) -> Result<Self, FailureError> {
        if !(lambda > 0.0 && lambda.is_finite() && k > 0.0 && k.is_finite()) {
            return Err(FailureError::InvalidParams { lambda, k });
        }
        Ok(WeibullParams { lambda, k })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    fn scaled(&self, t: f64) -> Result<f64, FailureError> {
        if t < 0.0 || t.is_nan() {
            return Err(FailureError::NegativeTime(t));
        }
        Ok((t / self.lambda).powf(self.k))
    }

    /// Probability of having failed by time `t`.
    pub fn cdf(&self, t: f64) -> Result<f64, FailureError> {
        Ok(-(-self.scaled(t)?).exp_m1())
    }

    /// Probability of still operating at time `t`.
    pub fn survival(&self, t: f64) -> Result<f64, FailureError> {
        Ok((-self.scaled(t)?).exp())
    }

    /// Instantaneous failure rate. At `t = 0` this is `+inf` for `k < 1`,
    /// `1/lambda` for `k = 1` and `0` for `k > 1`.
    pub fn hazard(&self, t: f64) -> Result<f64, FailureError> {
        if t < 0.0 || t.is_nan() {
            return Err(FailureError::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(match self.k.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => 1.0 / self.lambda,
                _ => 0.0,
            });
        }
        Ok(self.k / self.lambda * (t / self.lambda).powf(self.k - 1.0))
    }

    /// Inverse-transform sample for a uniform variate `u` in (0, 1).
    pub fn sample_failure_time(&self, u: f64) -> Result<f64, FailureError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(FailureError::UniformOutOfRange(u));
        }
        Ok(self.lambda * (-(-u).ln_1p()).powf(1.0 / self.k))
    }

    /// Survival probabilities of completing delivery by relaying now
    /// (`S(t + t_to_base)`) versus after visiting the next frontier
    /// (`S(t + t_to_front + t_front_to_base)`).
    pub fn survival_weights(
        &self,
        now: f64,
        t_to_base: f64,
        t_to_front: f64,
        t_front_to_base: f64,
    ) -> Result<(f64, f64), FailureError> {
        for t in [t_to_base, t_to_front, t_front_to_base] {
            if t < 0.0 || t.is_nan() {
                return Err(FailureError::NegativeTime(t));
            }
        }
        let s_now = self.survival(now + t_to_base)?;
        let s_pred = self.survival(now + (t_to_front + t_front_to_base))?;
        Ok((s_now, s_pred))
    }
}

/// Realized lifetime of every robot in one mission.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FailureSchedule {
    times: Vec<f64>,
}

impl FailureSchedule {
    /// No robot ever fails.
    pub fn disabled(n_robots: usize) -> Self {
        FailureSchedule {
            times: vec![f64::INFINITY; n_robots],
        }
    }

    /// One lifetime per robot, each from its own substream of `master_seed`.
    pub fn sample(params: &WeibullParams, n_robots: usize, master_seed: u64) -> Self {
        let times = (0..n_robots)
            .map(|i| {
                let mut rng = seed::substream(master_seed, seed::Stream::Failure, i as u64);
                let u: f64 = Open01.sample(&mut rng);
                params
                    .sample_failure_time(u)
                    .expect("Open01 yields values strictly inside (0, 1)")
            })
            .collect();
        FailureSchedule { times }
    }

    /// Explicit lifetimes. Non-positive times are rejected.
    pub fn fixed(times: Vec<f64>) -> Result<Self, FailureError> {
        if let Some(&bad) = times.iter().find(|t| !(**t > 0.0)) {
            return Err(FailureError::NegativeTime(bad));
        }
        Ok(FailureSchedule { times })
    }

    pub fn failure_time(&self, robot: usize) -> f64 {
        self.times[robot]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Draws `n` inverse-transform samples from `rng`.
pub fn sample_many(params: &WeibullParams, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            params.sample_failure_time(u).expect("u in (0, 1)")
        })
        .collect()
}
