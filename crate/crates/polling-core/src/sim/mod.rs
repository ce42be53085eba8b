//! Discrete-event simulator for cross-validating the analytical results.
//!
//! Each replication runs an independent event loop seeded from a
//! counter-based generator (ChaCha12) with the replication index as the
//! stream number, so results are bit-exact for a given `(config, seed)`
//! pair regardless of thread count. Draws happen in a fixed order: per
//! batch at arrival, the batch size first and then one location per
//! customer; the service requirement is drawn when service starts.
//!
//! Measurement uses a batch-indexed window. The first `warmup_batches`
//! arrivals are discarded, the next `measured_batches` arrivals are
//! measured, and time averages run from the first measured arrival to the
//! first arrival past the window. The loop continues past the window until
//! every measured batch has been delivered.

mod engine;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::SystemParameters;
use crate::policy::Policy;

use engine::RepOutcome;

/// Kinds of rows an event trace can contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Arrival,
    ServiceStart,
    ServiceCompletion,
    DepotCrossing,
}

impl TraceKind {
    pub fn name(self) -> &'static str {
        match self {
            TraceKind::Arrival => "arrival",
            TraceKind::ServiceStart => "service_start",
            TraceKind::ServiceCompletion => "service_completion",
            TraceKind::DepotCrossing => "depot_crossing",
        }
    }
}

/// One recorded event. The position is the server's location on the circle
/// at the event instant; the batch index counts arrivals from 0 and is
/// absent on depot crossings.
#[derive(Debug, Clone, Copy)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub position: f64,
    pub batch: Option<u64>,
}

/// Hard cap on the number of rows an event trace may hold.
pub const TRACE_ROW_CAP: usize = 1_000_000;

/// Records the event sequence of replication 0 under the given config,
/// truncated to `max_rows` rows (at most [`TRACE_ROW_CAP`]).
pub fn trace_events(config: &SimulationConfig, max_rows: usize) -> Result<Vec<TraceEvent>> {
    config.validate()?;
    Ok(engine::run_traced(config, max_rows.min(TRACE_ROW_CAP)))
}

/// Which observable an empirical transform probe averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMetric {
    Cycle,
    Delivery,
    Sojourn,
}

impl ProbeMetric {
    fn name(self) -> &'static str {
        match self {
            ProbeMetric::Cycle => "cycle_lst",
            ProbeMetric::Delivery => "delivery_lst",
            ProbeMetric::Sojourn => "sojourn_lst",
        }
    }
}

/// Run description for [`simulate`] and [`lst_probe`].
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub params: SystemParameters,
    pub policy: Policy,
    /// Batches discarded before measurement starts.
    pub warmup_batches: u64,
    /// Batches measured per replication, at least 1000.
    pub measured_batches: u64,
    /// Independent replications, at least 3.
    pub replications: u32,
    pub seed: u64,
}

impl SimulationConfig {
    /// Builds a config with defaults: warmup spanning ten mean cycles of
    /// arrivals (at least ten batches), 10000 measured batches, five
    /// replications, seed 1.
    pub fn new(params: SystemParameters, policy: Policy) -> Self {
        let warmup = (10.0 * params.mean_cycle() * params.lambda).ceil() as u64;
        SimulationConfig {
            params,
            policy,
            warmup_batches: warmup.max(10),
            measured_batches: 10_000,
            replications: 5,
            seed: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.params.lambda <= 0.0 {
            return Err(Error::InvalidConfig(
                "simulation requires a positive arrival rate".into(),
            ));
        }
        if self.measured_batches < 1000 {
            return Err(Error::InvalidConfig(format!(
                "measured_batches = {} must be at least 1000",
                self.measured_batches
            )));
        }
        if self.replications < 3 {
            return Err(Error::InvalidConfig(format!(
                "replications = {} must be at least 3",
                self.replications
            )));
        }
        Ok(())
    }
}

/// Point estimate with a 95% confidence half-width computed from the
/// Student t distribution over replication means.
#[derive(Debug, Clone)]
pub struct SimulationEstimate {
    pub metric: String,
    pub mean: f64,
    pub ci_half_width: f64,
    pub replications: u32,
    pub total_batches: u64,
}

fn estimate(name: &str, per_rep: &[f64], total_batches: u64) -> SimulationEstimate {
    let r = per_rep.len();
    let mean = per_rep.iter().sum::<f64>() / r as f64;
    let var = per_rep.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (r - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975);
    SimulationEstimate {
        metric: name.to_string(),
        mean,
        ci_half_width: t * (var / r as f64).sqrt(),
        replications: r as u32,
        total_batches,
    }
}

fn run_all(config: &SimulationConfig, probe: Option<(ProbeMetric, f64)>) -> Vec<RepOutcome> {
    (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| engine::run_replication(config, rep, probe))
        .collect()
}

/// Runs the configured replications and returns estimates of the mean
/// batch sojourn time (`esb`), mean batch delivery time (`ed`), the
/// time-average number of waiting customers (`el`), the first two cycle
/// moments, and the fraction of time spent serving.
pub fn simulate(config: &SimulationConfig) -> Result<Vec<SimulationEstimate>> {
    config.validate()?;
    let outcomes = run_all(config, None);
    let total = config.measured_batches * config.replications as u64;
    let per = |f: &dyn Fn(&RepOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<_>>();
    Ok(vec![
        estimate("esb", &per(&|o| o.sojourn_sum / o.sojourn_n as f64), total),
        estimate("ed", &per(&|o| o.delivery_sum / o.delivery_n as f64), total),
        estimate("el", &per(&|o| o.waiting_area / o.window_len), total),
        estimate("cycle_mean", &per(&|o| o.cycle_sum / o.cycle_n as f64), total),
        estimate(
            "cycle_second_moment",
            &per(&|o| o.cycle_sq_sum / o.cycle_n as f64),
            total,
        ),
        estimate(
            "work_fraction",
            &per(&|o| o.serving_time / o.window_len),
            total,
        ),
    ])
}

/// Estimates the Laplace transform `E[exp(-omega X)]` of the chosen
/// observable by averaging the exponential over the same measurement
/// window as [`simulate`].
pub fn lst_probe(
    config: &SimulationConfig,
    metric: ProbeMetric,
    omega: f64,
) -> Result<SimulationEstimate> {
    config.validate()?;
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "transform argument omega = {omega} must be finite and nonnegative"
        )));
    }
    let outcomes = run_all(config, Some((metric, omega)));
    let per: Vec<f64> = outcomes
        .iter()
        .map(|o| o.probe_sum / o.probe_n as f64)
        .collect();
    let total = config.measured_batches * config.replications as u64;
    Ok(estimate(metric.name(), &per, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gg;
    use crate::model::{BatchSizeDistribution, LocationDensity, ServiceDistribution};

    fn reference_params() -> SystemParameters {
        SystemParameters::new(
            0.5,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::uniform(),
        )
        .unwrap()
    }

    fn small_config(policy: Policy) -> SimulationConfig {
        let mut config = SimulationConfig::new(reference_params(), policy);
        config.measured_batches = 4000;
        config.replications = 3;
        config.seed = 7;
        config
    }

    fn find<'a>(estimates: &'a [SimulationEstimate], name: &str) -> &'a SimulationEstimate {
        estimates.iter().find(|e| e.metric == name).unwrap()
    }

    fn assert_covers(est: &SimulationEstimate, truth: f64) {
        assert!(
            (est.mean - truth).abs() <= 3.0 * est.ci_half_width,
            "{}: mean {} misses {} beyond 3 x {}",
            est.metric,
            est.mean,
            truth,
            est.ci_half_width
        );
    }

    #[test]
    fn gated_reference_means_match_analysis() {
        let estimates = simulate(&small_config(Policy::GloballyGated)).unwrap();
        assert_covers(find(&estimates, "esb"), 3.5);
        assert_covers(find(&estimates, "ed"), 14.0 / 3.0);
        assert_covers(find(&estimates, "cycle_mean"), 2.0);
        assert_covers(find(&estimates, "cycle_second_moment"), 16.0 / 3.0);
        assert_covers(find(&estimates, "work_fraction"), 0.5);
    }

    #[test]
    fn exhaustive_reference_means_match_analysis() {
        let estimates = simulate(&small_config(Policy::Exhaustive)).unwrap();
        assert_covers(find(&estimates, "esb"), 2.5);
        assert_covers(find(&estimates, "ed"), 4.0);
        assert_covers(find(&estimates, "el"), 0.75);
        assert_covers(find(&estimates, "cycle_mean"), 2.0);
        assert_covers(find(&estimates, "work_fraction"), 0.5);
    }

    #[test]
    fn replications_are_deterministic_for_a_seed() {
        let config = small_config(Policy::Exhaustive);
        let a = simulate(&config).unwrap();
        let b = simulate(&config).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            assert_eq!(x.ci_half_width.to_bits(), y.ci_half_width.to_bits());
        }
        let mut other = config;
        other.seed = 8;
        let c = simulate(&other).unwrap();
        assert_ne!(a[0].mean.to_bits(), c[0].mean.to_bits());
    }

    #[test]
    fn tiny_load_exhaustive_means_approach_light_limits() {
        let params = SystemParameters::new(
            1e-3,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::uniform(),
        )
        .unwrap();
        let mut config = SimulationConfig::new(params, Policy::Exhaustive);
        config.measured_batches = 1000;
        config.replications = 3;
        config.seed = 11;
        let estimates = simulate(&config).unwrap();
        assert_covers(find(&estimates, "esb"), 1.5);
        assert_covers(find(&estimates, "ed"), 2.0);
    }

    #[test]
    fn probe_at_zero_is_exactly_one() {
        let est = lst_probe(&small_config(Policy::GloballyGated), ProbeMetric::Cycle, 0.0).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.ci_half_width, 0.0);
    }

    #[test]
    fn cycle_probe_matches_transform() {
        let params = reference_params();
        let expected = gg::cycle_lst(&params, 0.5);
        let est = lst_probe(&small_config(Policy::GloballyGated), ProbeMetric::Cycle, 0.5).unwrap();
        assert_covers(&est, expected);
    }

    #[test]
    fn delivery_probe_matches_transform() {
        let params = reference_params();
        let expected = gg::gg_delivery_lst(&params, 0.25);
        let est = lst_probe(
            &small_config(Policy::GloballyGated),
            ProbeMetric::Delivery,
            0.25,
        )
        .unwrap();
        assert_covers(&est, expected);
    }

    #[test]
    fn waiting_count_is_insensitive_to_the_location_density() {
        let uniform = small_config(Policy::Exhaustive);
        let mut skewed = uniform.clone();
        skewed.params = SystemParameters::new(
            0.5,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::piecewise(vec![
                (0.0, vec![2.5]),
                (0.2, vec![1.0]),
                (0.5, vec![0.4]),
            ])
            .unwrap(),
        )
        .unwrap();
        let a = simulate(&uniform).unwrap();
        let b = simulate(&skewed).unwrap();
        let (ea, eb) = (find(&a, "el"), find(&b, "el"));
        assert!(
            (ea.mean - eb.mean).abs() <= 3.0 * (ea.ci_half_width + eb.ci_half_width),
            "waiting count moved with the density: {} vs {}",
            ea.mean,
            eb.mean
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = small_config(Policy::GloballyGated);
        config.replications = 2;
        assert!(simulate(&config).is_err());

        let mut config = small_config(Policy::GloballyGated);
        config.measured_batches = 500;
        assert!(simulate(&config).is_err());

        let mut config = small_config(Policy::GloballyGated);
        config.params = SystemParameters::new(
            0.0,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::uniform(),
        )
        .unwrap();
        assert!(simulate(&config).is_err());

        let config = small_config(Policy::GloballyGated);
        assert!(lst_probe(&config, ProbeMetric::Cycle, -0.5).is_err());
    }

    #[test]
    fn trace_rows_are_ordered_and_consistent() {
        let config = small_config(Policy::GloballyGated);
        let rows = trace_events(&config, TRACE_ROW_CAP).unwrap();
        assert!(rows.len() > 1000);
        let mut last_time = 0.0;
        let mut starts = 0u64;
        let mut completions = 0u64;
        let mut crossings = 0u64;
        for row in &rows {
            assert!(row.time >= last_time);
            last_time = row.time;
            assert!((0.0..1.0).contains(&row.position));
            match row.kind {
                TraceKind::Arrival => assert!(row.batch.is_some()),
                TraceKind::ServiceStart => {
                    assert!(row.batch.is_some());
                    starts += 1;
                }
                TraceKind::ServiceCompletion => {
                    assert!(row.batch.is_some());
                    completions += 1;
                }
                TraceKind::DepotCrossing => {
                    assert!(row.batch.is_none());
                    assert_eq!(row.position, 0.0);
                    crossings += 1;
                }
            }
        }
        assert!(crossings > 10);
        assert!(completions >= starts.saturating_sub(1) && completions <= starts);
    }

    #[test]
    fn trace_respects_the_row_cap() {
        let config = small_config(Policy::Exhaustive);
        let rows = trace_events(&config, 250).unwrap();
        assert_eq!(rows.len(), 250);
    }
}
