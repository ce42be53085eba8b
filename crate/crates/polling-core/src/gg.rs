//! Globally-gated discipline: exact cycle-time analysis and the transforms
//! and means of time to delivery and batch sojourn time.
//!
//! Under this discipline the server closes a gate each time it passes the
//! depot and, during the next tour, serves exactly the customers that were
//! present at that instant. The cycle transform is an infinite product
//! driven by the contraction δ₀(ω) = ω, δ_{i+1} = λ[1 − K̃(φ_B(δ_i))]: each
//! step shrinks by at least the utilization factor, so truncation carries a
//! geometric tail bound that is reported alongside every evaluation.

use crate::model::SystemParameters;
use crate::quadrature;

/// Point-evaluable cycle-time transform φ_C(ω) = exp(−α Σ_i δ_i(ω)).
#[derive(Debug, Clone)]
pub struct CycleTransform {
    params: SystemParameters,
}

impl CycleTransform {
    /// Evaluates φ_C(ω) for ω ≥ 0, returning the value and an absolute
    /// tolerance accounting for truncation of the δ-series at 1e-14: the
    /// discarded tail is at most δ_n·ρ/(1−ρ), contributing at most
    /// α·δ_n·ρ/(1−ρ) to the exponent.
    pub fn eval(&self, omega: f64) -> (f64, f64) {
        let deltas = delta_sequence(&self.params, omega, 1e-14);
        let sum: f64 = deltas.iter().sum();
        let rho = self.params.rho();
        let tail = if rho > 0.0 {
            deltas.last().copied().unwrap_or(0.0) * rho / (1.0 - rho)
        } else {
            0.0
        };
        ((-self.params.alpha * sum).exp(), self.params.alpha * tail)
    }

    /// The transform value alone.
    pub fn value(&self, omega: f64) -> f64 {
        self.eval(omega).0
    }
}

/// Cycle-length statistics under the globally-gated discipline.
#[derive(Debug, Clone)]
pub struct CycleStatistics {
    /// E[C] = α/(1−ρ).
    pub mean_c: f64,
    /// E[C²].
    pub second_moment_c: f64,
    /// Mean residual cycle E[C_R] = E[C²]/(2E[C]).
    pub mean_residual: f64,
    /// Length-biased mean E[C*] = E[C²]/E[C].
    pub mean_length_biased: f64,
    /// The transform φ_C, evaluable at any ω ≥ 0.
    pub lst: CycleTransform,
}

/// The decreasing sequence δ₀ = ω, δ_{i+1} = λ[1 − K̃(φ_B(δ_i))], truncated
/// at the first element below `tol` (which is included).
pub fn delta_sequence(params: &SystemParameters, omega: f64, tol: f64) -> Vec<f64> {
    debug_assert!(omega >= 0.0 && tol > 0.0);
    let mut seq = vec![omega];
    let mut current = omega;
    while current >= tol {
        current = params.lambda * (1.0 - params.batch.pgf(params.service.lst(current)));
        seq.push(current);
    }
    seq
}

/// Cycle-time transform φ_C(ω) = exp(−α Σ_i δ_i(ω)), series truncated at
/// 1e-14 with the geometric tail folded into the (unreported) tolerance.
pub fn cycle_lst(params: &SystemParameters, omega: f64) -> f64 {
    CycleTransform { params: params.clone() }.value(omega)
}

/// First two cycle moments and the derived residual and length-biased
/// means, with the point-evaluable transform attached.
pub fn cycle_moments(params: &SystemParameters) -> CycleStatistics {
    let rho = params.rho();
    let alpha = params.alpha;
    let mean_c = params.mean_cycle();
    let eb = params.service.mean();
    let eb2 = params.service.second_moment();
    let ek = params.batch.mean();
    let ekk1 = params.batch.factorial_second_moment();
    let second_moment_c = (alpha * alpha
        + 2.0 * rho * alpha * mean_c
        + params.lambda * ek * eb2 * mean_c
        + params.lambda * eb * eb * ekk1 * mean_c)
        / (1.0 - rho * rho);
    CycleStatistics {
        mean_c,
        second_moment_c,
        mean_residual: second_moment_c / (2.0 * mean_c),
        mean_length_biased: second_moment_c / mean_c,
        lst: CycleTransform { params: params.clone() },
    }
}

/// Joint transform E[e^{−ω_P·C_P − ω_R·C_R}] of the elapsed and remaining
/// cycle time at a uniformly random time instant, for ω_P ≠ ω_R. Test
/// helper: its marginal means are both E[C²]/(2E[C]).
pub fn cycle_age_residual_lst(params: &SystemParameters, omega_p: f64, omega_r: f64) -> f64 {
    debug_assert!(omega_p != omega_r);
    let transform = CycleTransform { params: params.clone() };
    (transform.value(omega_r) - transform.value(omega_p))
        / ((omega_p - omega_r) * params.mean_cycle())
}

fn delta_one(params: &SystemParameters, omega: f64) -> f64 {
    params.lambda * (1.0 - params.batch.pgf(params.service.lst(omega)))
}

/// Transform of the time to delivery: from a batch's arrival until the
/// server completes its full tour of serving that batch's customers and
/// returns to the depot.
pub fn gg_delivery_lst(params: &SystemParameters, omega: f64) -> f64 {
    debug_assert!(omega >= 0.0);
    if omega == 0.0 {
        return 1.0;
    }
    let transform = CycleTransform { params: params.clone() };
    let d1 = delta_one(params, omega);
    params.batch.pgf(params.service.lst(omega))
        * (-omega * params.alpha).exp()
        * (transform.value(d1) - transform.value(omega + d1))
        / (omega * params.mean_cycle())
}

/// Mean time to delivery E[D] = E[B]E[K] + α + (1+2ρ)E[C_R]. Does not
/// depend on the location density.
pub fn gg_mean_delivery(params: &SystemParameters) -> f64 {
    let stats = cycle_moments(params);
    params.service.mean() * params.batch.mean()
        + params.alpha
        + (1.0 + 2.0 * params.rho()) * stats.mean_residual
}

/// Transform of the batch sojourn time: from a batch's arrival until the
/// last of its own customers finishes service.
pub fn gg_sojourn_lst(params: &SystemParameters, omega: f64) -> f64 {
    debug_assert!(omega >= 0.0);
    if omega == 0.0 {
        return 1.0;
    }
    let transform = CycleTransform { params: params.clone() };
    let phi_b = params.service.lst(omega);
    let integrand = |x: f64| {
        let pi_cdf = params.location.cdf(x);
        let gated = params.lambda
            * (1.0 - params.batch.pgf(1.0 - pi_cdf + pi_cdf * phi_b));
        params.location.density(x)
            * params.batch.pgf_derivative(pi_cdf * phi_b)
            * (-omega * params.alpha * x).exp()
            * (transform.value(gated) - transform.value(omega + gated))
    };
    let cuts = params.location.breakpoints();
    let coarse = {
        let mut lo = 0.0;
        let mut acc = 0.0;
        for &c in &cuts {
            if c > 0.0 && c <= 1.0 {
                acc += quadrature::panel(&integrand, lo, c.min(1.0));
                lo = c.min(1.0);
            }
        }
        acc
    };
    let tol = 1e-9 * coarse.abs().max(1e-12);
    let integral = quadrature::integrate_split(&integrand, 0.0, 1.0, &cuts, tol);
    phi_b * integral / (omega * params.mean_cycle())
}

/// ∫₀¹ K̃(Π(x)) dx, split at the density's segment boundaries.
pub(crate) fn mean_pgf_of_cdf(params: &SystemParameters) -> f64 {
    let f = |x: f64| params.batch.pgf(params.location.cdf(x));
    quadrature::integrate_split(&f, 0.0, 1.0, &params.location.breakpoints(), 1e-10)
}

/// Mean batch sojourn time
/// E[S^B] = E[B]E[K] + E[C_R] + α − α∫₀¹K̃(Π(x))dx + ρE[C*]E[K/(K+1)].
pub fn gg_mean_sojourn(params: &SystemParameters) -> f64 {
    let stats = cycle_moments(params);
    params.service.mean() * params.batch.mean()
        + stats.mean_residual
        + params.alpha * (1.0 - mean_pgf_of_cdf(params))
        + params.rho() * stats.mean_length_biased * params.batch.mean_k_over_k_plus_1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        BatchSizeDistribution, LocationDensity, ServiceDistribution,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn reference() -> SystemParameters {
        SystemParameters::new(
            0.5,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::uniform(),
        )
        .unwrap()
    }

    fn with_lambda(lambda: f64) -> SystemParameters {
        SystemParameters::new(
            lambda,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::uniform(),
        )
        .unwrap()
    }

    #[test]
    fn delta_sequence_edge_cases() {
        let p = reference();
        assert_eq!(delta_sequence(&p, 0.0, 1e-12), vec![0.0]);
        let idle = with_lambda(0.0);
        assert_eq!(delta_sequence(&idle, 1.0, 1e-12), vec![1.0, 0.0]);
    }

    #[test]
    fn delta_sequence_contracts_at_utilization_rate() {
        let p = reference();
        let seq = delta_sequence(&p, 1.0, 1e-12);
        assert!(seq.len() > 3);
        for w in seq.windows(2) {
            assert!(w[1] <= p.rho() * w[0] + 1e-15, "ratio exceeded rho: {w:?}");
        }
        assert!(*seq.last().unwrap() < 1e-12);
    }

    #[test]
    fn cycle_lst_basics() {
        let p = reference();
        assert_abs_diff_eq!(cycle_lst(&p, 0.0), 1.0);
        let idle = with_lambda(0.0);
        assert_abs_diff_eq!(cycle_lst(&idle, 0.7), (-0.7f64).exp(), epsilon = 1e-14);
        let mut prev = 1.0;
        for i in 1..=10 {
            let v = cycle_lst(&p, i as f64 * 0.3);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn cycle_lst_tolerance_is_reported() {
        let p = reference();
        let t = CycleTransform { params: p };
        let (v, tol) = t.eval(0.5);
        assert!(v > 0.0 && v < 1.0);
        assert!(tol > 0.0 && tol < 1e-13);
    }

    #[test]
    fn cycle_moments_reference_values() {
        let stats = cycle_moments(&reference());
        assert_abs_diff_eq!(stats.mean_c, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(stats.second_moment_c, 16.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(stats.mean_residual, 4.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(stats.mean_length_biased, 8.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn cycle_moments_zero_load() {
        let stats = cycle_moments(&with_lambda(0.0));
        assert_abs_diff_eq!(stats.mean_c, 1.0);
        assert_abs_diff_eq!(stats.second_moment_c, 1.0);
        assert_abs_diff_eq!(stats.mean_residual, 0.5);
    }

    #[test]
    fn cycle_moments_paired_batches() {
        let p = SystemParameters::new(
            0.25,
            1.0,
            BatchSizeDistribution::deterministic(2).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::uniform(),
        )
        .unwrap();
        let stats = cycle_moments(&p);
        assert_abs_diff_eq!(stats.mean_c, 2.0, epsilon = 1e-14);
        // α² + 2ραE[C] + λ(E[K]E[B²] + E[K(K−1)]E[B]²)E[C] = 1 + 2 + 2,
        // divided by 1 − ρ² = 0.75.
        assert_abs_diff_eq!(stats.second_moment_c, 20.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn transform_derivative_at_zero_is_minus_mean() {
        let stats = cycle_moments(&reference());
        let h = 1e-6;
        let slope = (stats.lst.value(h) - 1.0) / h;
        assert_relative_eq!(-slope, stats.mean_c, max_relative = 1e-5);
    }

    #[test]
    fn age_and_residual_share_the_same_mean() {
        let p = reference();
        let stats = cycle_moments(&p);
        let h = 1e-5;
        let mean_age = (1.0 - cycle_age_residual_lst(&p, h, 0.0)) / h;
        let mean_res = (1.0 - cycle_age_residual_lst(&p, 0.0, h)) / h;
        assert_relative_eq!(mean_age, stats.mean_residual, max_relative = 1e-3);
        assert_relative_eq!(mean_res, stats.mean_residual, max_relative = 1e-3);
    }

    #[test]
    fn delivery_lst_normalization_and_idle_limit() {
        let p = reference();
        assert_abs_diff_eq!(gg_delivery_lst(&p, 0.0), 1.0);
        assert_abs_diff_eq!(gg_delivery_lst(&p, 1e-6), 1.0, epsilon = 1e-5);

        let nearly_idle = with_lambda(1e-6);
        let omega = 0.8;
        let expected = nearly_idle.service.lst(omega)
            * (-omega).exp()
            * (1.0 - (-omega).exp())
            / omega;
        assert_relative_eq!(gg_delivery_lst(&nearly_idle, omega), expected, max_relative = 1e-4);
    }

    #[test]
    fn mean_delivery_reference_and_density_invariance() {
        let p = reference();
        assert_abs_diff_eq!(gg_mean_delivery(&p), 14.0 / 3.0, epsilon = 1e-13);

        let idle = with_lambda(0.0);
        assert_abs_diff_eq!(gg_mean_delivery(&idle), 1.0 + 1.5, epsilon = 1e-14);

        let skewed = SystemParameters::new(
            0.5,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::piecewise(vec![(0.0, vec![0.0]), (0.99, vec![100.0])]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(gg_mean_delivery(&skewed), 14.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn sojourn_lst_normalization() {
        let p = reference();
        assert_abs_diff_eq!(gg_sojourn_lst(&p, 0.0), 1.0);
        assert_abs_diff_eq!(gg_sojourn_lst(&p, 1e-6), 1.0, epsilon = 1e-5);
        let mut prev = 1.0;
        for i in 1..=8 {
            let v = gg_sojourn_lst(&p, 0.4 * i as f64);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn sojourn_lst_concentrated_density_limit() {
        // With single-customer batches and all mass in a sliver at x₀ the
        // x-integral collapses: Π(x) sweeps 0 → 1 across the sliver while
        // everything else is frozen, leaving
        //   φ_B e^{−ωαx₀} (1/(ωE[C])) ∫₀¹ [φ_C(sδ₁) − φ_C(ω+sδ₁)] ds.
        let x0 = 0.6;
        let eps = 1e-4;
        let p = SystemParameters::new(
            0.5,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::piecewise(vec![
                (0.0, vec![0.0]),
                (x0, vec![1.0 / eps]),
                (x0 + eps, vec![0.0]),
            ])
            .unwrap(),
        )
        .unwrap();
        let omega = 0.7;
        let transform = CycleTransform { params: p.clone() };
        let d1 = delta_one(&p, omega);
        let inner = |s: f64| transform.value(s * d1) - transform.value(omega + s * d1);
        let expected = p.service.lst(omega) * (-omega * p.alpha * x0).exp()
            / (omega * p.mean_cycle())
            * quadrature::integrate(&inner, 0.0, 1.0, 1e-11);
        assert_relative_eq!(gg_sojourn_lst(&p, omega), expected, max_relative = 1e-3);
    }

    #[test]
    fn mean_sojourn_reference_value() {
        assert_abs_diff_eq!(gg_mean_sojourn(&reference()), 3.5, epsilon = 1e-10);
    }

    #[test]
    fn mean_sojourn_near_zero_load() {
        let p = with_lambda(1e-9);
        assert_abs_diff_eq!(gg_mean_sojourn(&p), 2.0, epsilon = 1e-7);
    }

    #[test]
    fn delivery_exceeds_sojourn_by_the_extra_travel() {
        let p = reference();
        let gap = gg_mean_delivery(&p) - gg_mean_sojourn(&p);
        assert_abs_diff_eq!(gap, 7.0 / 6.0, epsilon = 1e-10);
        let stats = cycle_moments(&p);
        let identity = p.alpha * mean_pgf_of_cdf(&p)
            + p.rho() * stats.mean_length_biased * p.batch.mean_inv_k_plus_1();
        assert_abs_diff_eq!(gap, identity, epsilon = 1e-10);
    }

    #[test]
    fn mean_sojourn_prefers_mass_just_past_the_depot() {
        let at = |c: f64| {
            let p = SystemParameters::new(
                0.5,
                1.0,
                BatchSizeDistribution::deterministic(1).unwrap(),
                ServiceDistribution::deterministic(1.0).unwrap(),
                LocationDensity::piecewise(vec![
                    (0.0, vec![0.0]),
                    (c, vec![100.0]),
                    (c + 0.01, vec![0.0]),
                ])
                .unwrap(),
            )
            .unwrap();
            gg_mean_sojourn(&p)
        };
        let values = [at(0.9), at(0.5), at(0.1), at(0.01)];
        for w in values.windows(2) {
            assert!(w[0] > w[1], "sojourn should shrink toward the depot: {values:?}");
        }
    }

    #[test]
    fn delivery_lst_derivative_matches_mean() {
        let p = reference();
        let h = 1e-5;
        let mean_d = (1.0 - gg_delivery_lst(&p, h)) / h;
        assert_relative_eq!(mean_d, gg_mean_delivery(&p), max_relative = 1e-4);
        let mean_s = (1.0 - gg_sojourn_lst(&p, h)) / h;
        assert_relative_eq!(mean_s, gg_mean_sojourn(&p), max_relative = 1e-4);
    }
}
