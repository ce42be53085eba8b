//! Light- and heavy-traffic limits of the mean batch sojourn time and mean
//! time to delivery, for both disciplines, plus the gaps between them.
//!
//! Light limits are plain means at vanishing load. Heavy limits are stated
//! in scaled form: the reported number is the limit of (1−ρ)·mean as ρ→1
//! along a family with fixed α, batch, service, and location. The heavy
//! constants contain no location density at all.

use crate::exhaustive::means::double_arc_pgf;
use crate::gg::mean_pgf_of_cdf;
use crate::model::SystemParameters;
use crate::policy::Policy;
use crate::quadrature;

/// Asymptotic regime of a limit report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Light,
    Heavy,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Light => write!(f, "light"),
            Regime::Heavy => write!(f, "heavy"),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "light" => Ok(Regime::Light),
            "heavy" => Ok(Regime::Heavy),
            other => Err(format!(
                "unknown regime {other:?}; expected \"light\" or \"heavy\""
            )),
        }
    }
}

/// Limiting constants for one policy in one regime.
#[derive(Debug, Clone)]
pub struct LimitReport {
    pub policy: Policy,
    pub regime: Regime,
    /// Light: limiting mean sojourn time. Heavy: limit of (1−ρ)·E[S^B].
    pub sojourn_limit: f64,
    /// Light: limiting mean time to delivery. Heavy: limit of (1−ρ)·E[D].
    pub delivery_limit: f64,
    /// Globally gated minus exhaustive, sojourn, same regime and scaling.
    pub policy_gap_sojourn: f64,
    /// Globally gated minus exhaustive, delivery, same regime and scaling.
    pub policy_gap_delivery: f64,
}

/// ∫₀¹ K̃(1 − Π(u)) du, the batch PGF averaged over the remaining π-mass
/// ahead of a uniformly placed server.
fn mean_pgf_of_remaining(params: &SystemParameters) -> f64 {
    let cuts = params.location.breakpoints();
    quadrature::integrate_split(
        &|u| params.batch.pgf(1.0 - params.location.cdf(u)),
        0.0,
        1.0,
        &cuts,
        1e-10,
    )
}

fn limit_pair(params: &SystemParameters, policy: Policy, regime: Regime) -> (f64, f64) {
    let alpha = params.alpha;
    let ebk = params.batch.mean() * params.service.mean();
    match (policy, regime) {
        (Policy::GloballyGated, Regime::Light) => {
            let sojourn = ebk + 1.5 * alpha - alpha * mean_pgf_of_cdf(params);
            (sojourn, ebk + 1.5 * alpha)
        }
        (Policy::Exhaustive, Regime::Light) => {
            let sojourn = ebk + alpha - alpha * double_arc_pgf(params, false);
            let delivery = ebk + 1.5 * alpha - alpha * mean_pgf_of_remaining(params);
            (sojourn, delivery)
        }
        (policy, Regime::Heavy) => {
            // Q collects the service-driven part of the limit constants:
            // Q = E[B²]/(2E[B]) + E[B]·E[K(K−1)]/(2E[K]).
            let kappa = params.batch.factorial_second_moment() / params.batch.mean();
            let q = params.service.second_moment() / (2.0 * params.service.mean())
                + params.service.mean() * kappa / 2.0;
            let m = params.batch.mean_k_over_k_plus_1();
            match policy {
                Policy::GloballyGated => ((0.5 + m) * (alpha + q), 1.5 * (alpha + q)),
                Policy::Exhaustive => {
                    ((alpha + 2.0 * q) * m, (alpha + 2.0 * q) * (m + 0.5))
                }
            }
        }
    }
}

/// Both policies' limits in one regime, as (globally gated, exhaustive).
fn both(params: &SystemParameters, regime: Regime) -> ((f64, f64), (f64, f64)) {
    (
        limit_pair(params, Policy::GloballyGated, regime),
        limit_pair(params, Policy::Exhaustive, regime),
    )
}

fn report(params: &SystemParameters, policy: Policy, regime: Regime) -> LimitReport {
    let (gg, ex) = both(params, regime);
    let (sojourn_limit, delivery_limit) = match policy {
        Policy::GloballyGated => gg,
        Policy::Exhaustive => ex,
    };
    LimitReport {
        policy,
        regime,
        sojourn_limit,
        delivery_limit,
        policy_gap_sojourn: gg.0 - ex.0,
        policy_gap_delivery: gg.1 - ex.1,
    }
}

/// Limits for the globally gated discipline.
pub fn gg_limits(params: &SystemParameters, regime: Regime) -> LimitReport {
    report(params, Policy::GloballyGated, regime)
}

/// Limits for the exhaustive discipline.
pub fn exhaustive_limits(params: &SystemParameters, regime: Regime) -> LimitReport {
    report(params, Policy::Exhaustive, regime)
}

/// Globally gated minus exhaustive limit, as (sojourn gap, delivery gap).
/// Computed as the difference of the two policies' limit constants, which
/// keeps the gaps consistent with the reported limits by construction.
pub fn policy_gap(params: &SystemParameters, regime: Regime) -> (f64, f64) {
    let (gg, ex) = both(params, regime);
    (gg.0 - ex.0, gg.1 - ex.1)
}
