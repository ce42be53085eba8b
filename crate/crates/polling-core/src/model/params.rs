//! Full system description and derived global quantities.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::model::batch::BatchSizeDistribution;
use crate::model::location::LocationDensity;
use crate::model::service::ServiceDistribution;

/// Everything that defines one polling system instance: batch arrival rate
/// `lambda`, full-circle travel time `alpha`, the batch size law, the
/// service time law, and the customer location density on the circle.
#[derive(Debug, Clone)]
pub struct SystemParameters {
    pub lambda: f64,
    pub alpha: f64,
    pub batch: BatchSizeDistribution,
    pub service: ServiceDistribution,
    pub location: LocationDensity,
}

impl SystemParameters {
    /// Validates positivity of the travel time, nonnegativity of the arrival
    /// rate, and stability `ρ = λ·E[K]·E[B] < 1`.
    pub fn new(
        lambda: f64,
        alpha: f64,
        batch: BatchSizeDistribution,
        service: ServiceDistribution,
        location: LocationDensity,
    ) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidConfig("travel time alpha must be positive".into()));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidConfig("arrival rate lambda must be nonnegative".into()));
        }
        let rho = lambda * batch.mean() * service.mean();
        if rho >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "utilization rho = {rho} must be below 1 for stability"
            )));
        }
        Ok(SystemParameters { lambda, alpha, batch, service, location })
    }

    /// Utilization ρ = λ·E[K]·E[B].
    pub fn rho(&self) -> f64 {
        self.lambda * self.batch.mean() * self.service.mean()
    }

    /// Customer arrival rate λ·E[K].
    pub fn customer_rate(&self) -> f64 {
        self.lambda * self.batch.mean()
    }

    /// Mean cycle length α / (1 − ρ).
    pub fn mean_cycle(&self) -> f64 {
        self.alpha / (1.0 - self.rho())
    }

    /// Stationary server location density ρ·π(y) + 1 − ρ.
    pub fn server_location_density(&self, y: f64) -> f64 {
        let rho = self.rho();
        rho * self.location.density(y) + 1.0 - rho
    }

    /// Stable hash of every defining number, used to tie grid solutions to
    /// the parameters they were computed for.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.lambda.to_bits().hash(&mut h);
        self.alpha.to_bits().hash(&mut h);
        for &p in self.batch.pmf() {
            p.to_bits().hash(&mut h);
        }
        match self.service {
            ServiceDistribution::Deterministic { b } => {
                0u8.hash(&mut h);
                b.to_bits().hash(&mut h);
            }
            ServiceDistribution::Exponential { mean } => {
                1u8.hash(&mut h);
                mean.to_bits().hash(&mut h);
            }
            ServiceDistribution::TwoPoint { b, p } => {
                2u8.hash(&mut h);
                b.to_bits().hash(&mut h);
                p.to_bits().hash(&mut h);
            }
        }
        for (start, coeffs) in self.location.raw_segments() {
            start.to_bits().hash(&mut h);
            for c in coeffs {
                c.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}
