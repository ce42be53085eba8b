//! Batch size distribution on {1, 2, …}.
//!
//! Every variant is reduced to a finite probability mass function, so the
//! generating function K̃(z) = Σ p_k zᵏ, its derivatives, and the fractional
//! moments E[K/(K+1)] and E[1/(K+1)] are all finite sums. The shifted
//! Poisson keeps 1 + Poisson(μ−1) mass up to a 12-standard-deviation cutoff
//! and insists the discarded tail is below 1e-10 before renormalizing.

use crate::error::{Error, Result};

/// Distribution of the number of customers arriving together in one batch.
#[derive(Debug, Clone)]
pub struct BatchSizeDistribution {
    /// pmf[i] = P(K = i + 1); support starts at batch size 1.
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    factorial_second: f64,
    mean_k_over_k_plus_1: f64,
    mean_inv_k_plus_1: f64,
}

impl BatchSizeDistribution {
    /// Batches of a fixed size `k ≥ 1`.
    pub fn deterministic(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        let mut pmf = vec![0.0; k];
        pmf[k - 1] = 1.0;
        Self::from_pmf(pmf)
    }

    /// Explicit pmf with `p[0] = P(K = 1)`, `p[1] = P(K = 2)`, …
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidConfig("batch pmf must be nonempty".into()));
        }
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig("batch pmf entries must be nonnegative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "batch pmf sums to {total}, expected 1 (tolerance 1e-12)"
            )));
        }
        let mut pmf = pmf;
        while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
            pmf.pop();
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        let mut mean = 0.0;
        let mut factorial_second = 0.0;
        let mut mean_k_over_k_plus_1 = 0.0;
        let mut mean_inv_k_plus_1 = 0.0;
        for (i, &p) in pmf.iter().enumerate() {
            let k = (i + 1) as f64;
            mean += k * p;
            factorial_second += k * (k - 1.0) * p;
            mean_k_over_k_plus_1 += k / (k + 1.0) * p;
            mean_inv_k_plus_1 += p / (k + 1.0);
        }
        Ok(BatchSizeDistribution {
            pmf,
            cdf,
            mean,
            factorial_second,
            mean_k_over_k_plus_1,
            mean_inv_k_plus_1,
        })
    }

    /// Shifted Poisson: K = 1 + Poisson(mean − 1), parameterized by the
    /// batch mean E[K] = `mean` ≥ 1.
    pub fn shifted_poisson(mean: f64) -> Result<Self> {
        if !mean.is_finite() || mean < 1.0 {
            return Err(Error::InvalidConfig(
                "shifted-Poisson batch mean must be at least 1".into(),
            ));
        }
        let mu = mean - 1.0;
        if mu == 0.0 {
            return Self::deterministic(1);
        }
        let k_max = (mu + 12.0 * mu.sqrt()).ceil() as usize;
        let mut pmf = Vec::with_capacity(k_max + 1);
        // Poisson(μ) mass at 0..=k_max via the multiplicative recurrence.
        let mut p = (-mu).exp();
        let mut acc = 0.0;
        for j in 0..=k_max {
            if j > 0 {
                p *= mu / j as f64;
            }
            pmf.push(p);
            acc += p;
        }
        let truncated = 1.0 - acc;
        if truncated >= 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "shifted-Poisson truncation at {k_max} leaves mass {truncated:.3e} ≥ 1e-10"
            )));
        }
        for q in &mut pmf {
            *q /= acc;
        }
        Self::from_pmf(pmf)
    }

    /// E[K].
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// E[K(K−1)].
    pub fn factorial_second_moment(&self) -> f64 {
        self.factorial_second
    }

    /// E[K/(K+1)].
    pub fn mean_k_over_k_plus_1(&self) -> f64 {
        self.mean_k_over_k_plus_1
    }

    /// E[1/(K+1)].
    pub fn mean_inv_k_plus_1(&self) -> f64 {
        self.mean_inv_k_plus_1
    }

    /// Generating function K̃(z) = Σ p_k zᵏ.
    pub fn pgf(&self, z: f64) -> f64 {
        // Horner over Σ p_k z^(k-1), then one extra factor z.
        let inner = self.pmf.iter().rev().fold(0.0, |acc, &p| acc * z + p);
        z * inner
    }

    /// First derivative K̃′(z) = Σ k·p_k z^(k−1).
    pub fn pgf_derivative(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &p) in self.pmf.iter().enumerate().rev() {
            let k = (i + 1) as f64;
            acc = acc * z + k * p;
        }
        acc
    }

    /// Second derivative K̃″(z) = Σ k(k−1)·p_k z^(k−2).
    pub fn pgf_second_derivative(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &p) in self.pmf.iter().enumerate().rev().take(self.pmf.len().saturating_sub(1)) {
            let k = (i + 1) as f64;
            acc = acc * z + k * (k - 1.0) * p;
        }
        acc
    }

    /// Inverse-CDF sample: smallest k with CDF(k) > u.
    pub fn sample(&self, u: f64) -> usize {
        debug_assert!((0.0..1.0).contains(&u));
        self.cdf.partition_point(|&c| c <= u) + 1
    }

    /// The pmf over k = 1, 2, …, for fingerprinting and inspection.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_moments() {
        let k = BatchSizeDistribution::deterministic(2).unwrap();
        assert_abs_diff_eq!(k.mean(), 2.0);
        assert_abs_diff_eq!(k.factorial_second_moment(), 2.0);
        assert_abs_diff_eq!(k.mean_k_over_k_plus_1(), 2.0 / 3.0);
        assert_abs_diff_eq!(k.pgf(0.5), 0.25);
        assert_abs_diff_eq!(k.pgf_derivative(0.5), 1.0);
        assert_abs_diff_eq!(k.pgf_second_derivative(0.5), 2.0);
    }

    #[test]
    fn pgf_identities() {
        let k = BatchSizeDistribution::from_pmf(vec![0.5, 0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(k.pgf(1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.pgf_derivative(1.0), k.mean(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            k.pgf_second_derivative(1.0),
            k.factorial_second_moment(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn shifted_poisson_mean_is_exact() {
        let k = BatchSizeDistribution::shifted_poisson(15.0).unwrap();
        assert_abs_diff_eq!(k.mean(), 15.0, epsilon = 1e-9);
        // Var(K) = μ = 14 for the shifted Poisson: E[K(K-1)] = Var + E² − E
        assert_abs_diff_eq!(k.factorial_second_moment(), 14.0 + 225.0 - 15.0, epsilon = 1e-7);
    }

    #[test]
    fn fractional_moments_are_complementary() {
        let k = BatchSizeDistribution::shifted_poisson(3.0).unwrap();
        assert_abs_diff_eq!(
            k.mean_k_over_k_plus_1() + k.mean_inv_k_plus_1(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sampling_matches_pmf() {
        let k = BatchSizeDistribution::from_pmf(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(k.sample(0.0), 1);
        assert_eq!(k.sample(0.49), 1);
        assert_eq!(k.sample(0.5), 2);
        assert_eq!(k.sample(0.79), 2);
        assert_eq!(k.sample(0.8), 3);
        assert_eq!(k.sample(0.999), 3);
    }
}
