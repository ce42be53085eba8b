//! Service time distribution.
//!
//! Three concrete families cover everything the analysis needs, because all
//! formulas consume the service time only through its Laplace–Stieltjes
//! transform and its first two moments. A distribution given by moments
//! alone is canonicalized to the two-point law on {0, b} matching them,
//! which keeps sampling and transform evaluation exact.

use crate::error::{Error, Result};

/// Distribution of a single customer's service requirement.
#[derive(Debug, Clone)]
pub enum ServiceDistribution {
    /// Constant service time `b > 0`.
    Deterministic { b: f64 },
    /// Exponential with mean `m > 0`.
    Exponential { mean: f64 },
    /// Mass `p` at `b` and `1 − p` at zero.
    TwoPoint { b: f64, p: f64 },
}

impl ServiceDistribution {
    pub fn deterministic(b: f64) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidConfig("deterministic service time must be positive".into()));
        }
        Ok(ServiceDistribution::Deterministic { b })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(Error::InvalidConfig("exponential service mean must be positive".into()));
        }
        Ok(ServiceDistribution::Exponential { mean })
    }

    /// Two-point law on {0, b} with the given first two moments:
    /// `b = m2 / m1`, `p = m1² / m2`. Requires `m2 ≥ m1²`.
    pub fn from_moments(m1: f64, m2: f64) -> Result<Self> {
        if !m1.is_finite() || m1 <= 0.0 || !m2.is_finite() || m2 <= 0.0 {
            return Err(Error::InvalidConfig("service moments must be positive".into()));
        }
        if m2 < m1 * m1 * (1.0 - 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "second moment {m2} is below the square of the mean {m1}; no distribution matches"
            )));
        }
        let m2 = m2.max(m1 * m1);
        Ok(ServiceDistribution::TwoPoint { b: m2 / m1, p: m1 * m1 / m2 })
    }

    /// E[B].
    pub fn mean(&self) -> f64 {
        match *self {
            ServiceDistribution::Deterministic { b } => b,
            ServiceDistribution::Exponential { mean } => mean,
            ServiceDistribution::TwoPoint { b, p } => p * b,
        }
    }

    /// E[B²].
    pub fn second_moment(&self) -> f64 {
        match *self {
            ServiceDistribution::Deterministic { b } => b * b,
            ServiceDistribution::Exponential { mean } => 2.0 * mean * mean,
            ServiceDistribution::TwoPoint { b, p } => p * b * b,
        }
    }

    /// Laplace–Stieltjes transform E[e^{−ωB}] for real ω ≥ 0.
    pub fn lst(&self, omega: f64) -> f64 {
        match *self {
            ServiceDistribution::Deterministic { b } => (-omega * b).exp(),
            ServiceDistribution::Exponential { mean } => 1.0 / (1.0 + omega * mean),
            ServiceDistribution::TwoPoint { b, p } => 1.0 - p + p * (-omega * b).exp(),
        }
    }

    /// Inverse CDF at `u ∈ [0, 1)`, used for sampling.
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u));
        match *self {
            ServiceDistribution::Deterministic { b } => b,
            ServiceDistribution::Exponential { mean } => -mean * (1.0 - u).ln(),
            ServiceDistribution::TwoPoint { b, p } => {
                if u < 1.0 - p {
                    0.0
                } else {
                    b
                }
            }
        }
    }
}
