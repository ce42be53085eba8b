//! Scenario files: a JSON description of one system instance, plus a few
//! built-in instances used throughout the tests and the command line.
//!
//! The schema is
//!
//! ```json
//! {
//!   "lambda": 0.5,
//!   "alpha": 1.0,
//!   "batch": {"kind": "deterministic", "k": 1},
//!   "service": {"kind": "deterministic", "value": 1.0},
//!   "location": {"kind": "uniform"}
//! }
//! ```
//!
//! where `batch.kind` is one of `deterministic` (field `k`), `pmf` (field
//! `probabilities`, indexed from batch size 1), or `shifted_poisson`
//! (field `mean`); `service.kind` is one of `deterministic` (field
//! `value`), `exponential` (field `mean`), or `moments` (fields `mean` and
//! `second_moment`); and `location.kind` is `uniform` or `piecewise` with
//! `segments`, each `{"start": s, "coefficients": [c0, c1, ...]}` giving
//! the density `c0 + c1 x + ...` in global coordinates from `s` up to the
//! next segment's start (the last segment runs to 1). Starts must begin at
//! 0 and increase strictly, and the density must integrate to 1.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BatchSizeDistribution, LocationDensity, ServiceDistribution, SystemParameters,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    lambda: f64,
    alpha: f64,
    batch: BatchSpec,
    service: ServiceSpec,
    location: LocationSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum BatchSpec {
    Deterministic { k: usize },
    Pmf { probabilities: Vec<f64> },
    ShiftedPoisson { mean: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ServiceSpec {
    Deterministic { value: f64 },
    Exponential { mean: f64 },
    Moments { mean: f64, second_moment: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LocationSpec {
    Uniform,
    Piecewise { segments: Vec<SegmentSpec> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSpec {
    start: f64,
    coefficients: Vec<f64>,
}

impl ScenarioFile {
    fn build(self) -> Result<SystemParameters> {
        let batch = match self.batch {
            BatchSpec::Deterministic { k } => BatchSizeDistribution::deterministic(k)?,
            BatchSpec::Pmf { probabilities } => BatchSizeDistribution::from_pmf(probabilities)?,
            BatchSpec::ShiftedPoisson { mean } => BatchSizeDistribution::shifted_poisson(mean)?,
        };
        let service = match self.service {
            ServiceSpec::Deterministic { value } => ServiceDistribution::deterministic(value)?,
            ServiceSpec::Exponential { mean } => ServiceDistribution::exponential(mean)?,
            ServiceSpec::Moments { mean, second_moment } => {
                ServiceDistribution::from_moments(mean, second_moment)?
            }
        };
        let location = match self.location {
            LocationSpec::Uniform => LocationDensity::uniform(),
            LocationSpec::Piecewise { segments } => LocationDensity::piecewise(
                segments.into_iter().map(|s| (s.start, s.coefficients)).collect(),
            )?,
        };
        SystemParameters::new(self.lambda, self.alpha, batch, service, location)
    }
}

/// Parses a scenario from its JSON text.
pub fn parse_scenario(json: &str) -> Result<SystemParameters> {
    let file: ScenarioFile = serde_json::from_str(json)
        .map_err(|e| Error::InvalidConfig(format!("scenario JSON: {e}")))?;
    file.build()
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<SystemParameters> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidConfig(format!("cannot read scenario {}: {e}", path.display()))
    })?;
    parse_scenario(&text)
}

/// Serializes parameters back to scenario JSON.
pub fn to_json(params: &SystemParameters) -> String {
    let batch = BatchSpec::Pmf {
        probabilities: params.batch.pmf().to_vec(),
    };
    let service = match params.service {
        ServiceDistribution::Deterministic { b } => ServiceSpec::Deterministic { value: b },
        ServiceDistribution::Exponential { mean } => ServiceSpec::Exponential { mean },
        ServiceDistribution::TwoPoint { .. } => ServiceSpec::Moments {
            mean: params.service.mean(),
            second_moment: params.service.second_moment(),
        },
    };
    let location = LocationSpec::Piecewise {
        segments: params
            .location
            .raw_segments()
            .into_iter()
            .map(|(start, coefficients)| SegmentSpec { start, coefficients })
            .collect(),
    };
    let file = ScenarioFile {
        lambda: params.lambda,
        alpha: params.alpha,
        batch,
        service,
        location,
    };
    serde_json::to_string_pretty(&file).expect("scenario serializes")
}

/// Returns a copy of `params` with the arrival rate rescaled so that the
/// utilization equals `rho`.
pub fn with_rho(params: &SystemParameters, rho: f64) -> Result<SystemParameters> {
    if !rho.is_finite() || !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!(
            "target utilization rho = {rho} must lie in [0, 1)"
        )));
    }
    let lambda = rho / (params.batch.mean() * params.service.mean());
    SystemParameters::new(
        lambda,
        params.alpha,
        params.batch.clone(),
        params.service.clone(),
        params.location.clone(),
    )
}

/// Unit reference instance: unit circle travel time, single-customer
/// batches, unit deterministic service, uniform locations, utilization
/// one half.
pub fn reference() -> SystemParameters {
    SystemParameters::new(
        0.5,
        1.0,
        BatchSizeDistribution::deterministic(1).expect("valid"),
        ServiceDistribution::deterministic(1.0).expect("valid"),
        LocationDensity::uniform(),
    )
    .expect("valid reference scenario")
}

/// Warehouse-style instance: a 600 second lap, exponential 5 second picks,
/// shifted-Poisson order sizes with mean 15, and a piecewise-uniform
/// density that puts half the demand on the first fifth of the circle.
pub fn warehouse(rho: f64) -> Result<SystemParameters> {
    let batch = BatchSizeDistribution::shifted_poisson(15.0)?;
    let service = ServiceDistribution::exponential(5.0)?;
    let location = LocationDensity::piecewise(vec![
        (0.0, vec![2.5]),
        (0.2, vec![1.0]),
        (0.5, vec![0.4]),
    ])?;
    let lambda = rho / (batch.mean() * service.mean());
    SystemParameters::new(lambda, 600.0, batch, service, location)
}

/// Travel-dominated instance: unit lap, batches of 15, service 0.01.
pub fn small_service(rho: f64) -> Result<SystemParameters> {
    let batch = BatchSizeDistribution::deterministic(15)?;
    let service = ServiceDistribution::deterministic(0.01)?;
    let lambda = rho / (batch.mean() * service.mean());
    SystemParameters::new(lambda, 1.0, batch, service, LocationDensity::uniform())
}

/// Service-dominated instance: unit lap, batches of 15, unit service.
pub fn large_service(rho: f64) -> Result<SystemParameters> {
    let batch = BatchSizeDistribution::deterministic(15)?;
    let service = ServiceDistribution::deterministic(1.0)?;
    let lambda = rho / (batch.mean() * service.mean());
    SystemParameters::new(lambda, 1.0, batch, service, LocationDensity::uniform())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_reference_scenario() {
        let json = r#"{
            "lambda": 0.5,
            "alpha": 1.0,
            "batch": {"kind": "deterministic", "k": 1},
            "service": {"kind": "deterministic", "value": 1.0},
            "location": {"kind": "uniform"}
        }"#;
        let params = parse_scenario(json).unwrap();
        assert_eq!(params.rho(), 0.5);
        assert_eq!(params.mean_cycle(), 2.0);
    }

    #[test]
    fn parses_piecewise_locations_and_batch_pmfs() {
        let json = r#"{
            "lambda": 0.1,
            "alpha": 2.0,
            "batch": {"kind": "pmf", "probabilities": [0.25, 0.75]},
            "service": {"kind": "exponential", "mean": 0.5},
            "location": {"kind": "piecewise", "segments": [
                {"start": 0.0, "coefficients": [2.5]},
                {"start": 0.2, "coefficients": [1.0]},
                {"start": 0.5, "coefficients": [0.4]}
            ]}
        }"#;
        let params = parse_scenario(json).unwrap();
        assert!((params.batch.mean() - 1.75).abs() < 1e-12);
        assert!((params.location.density(0.1) - 2.5).abs() < 1e-12);
        assert!((params.location.density(0.7) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn roundtrips_through_json() {
        let params = warehouse(0.6).unwrap();
        let again = parse_scenario(&to_json(&params)).unwrap();
        assert!((again.rho() - 0.6).abs() < 1e-12);
        assert!((again.service.second_moment() - params.service.second_moment()).abs() < 1e-12);
        assert!((again.batch.factorial_second_moment()
            - params.batch.factorial_second_moment())
        .abs()
            < 1e-9);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_scenario("not json").is_err());
        let unknown_field = r#"{
            "lambda": 0.5, "alpha": 1.0, "speed": 3.0,
            "batch": {"kind": "deterministic", "k": 1},
            "service": {"kind": "deterministic", "value": 1.0},
            "location": {"kind": "uniform"}
        }"#;
        assert!(parse_scenario(unknown_field).is_err());
        let unstable = r#"{
            "lambda": 2.0, "alpha": 1.0,
            "batch": {"kind": "deterministic", "k": 1},
            "service": {"kind": "deterministic", "value": 1.0},
            "location": {"kind": "uniform"}
        }"#;
        assert!(parse_scenario(unstable).is_err());
    }

    #[test]
    fn rescaling_hits_the_requested_utilization() {
        let base = warehouse(0.6).unwrap();
        let scaled = with_rho(&base, 0.3).unwrap();
        assert!((scaled.rho() - 0.3).abs() < 1e-12);
        assert!(with_rho(&base, 1.0).is_err());
    }

    #[test]
    fn built_in_scenarios_are_stable() {
        assert!((warehouse(0.6).unwrap().rho() - 0.6).abs() < 1e-12);
        assert!((small_service(0.3).unwrap().rho() - 0.3).abs() < 1e-12);
        assert!((large_service(0.9).unwrap().rho() - 0.9).abs() < 1e-12);
        assert_eq!(reference().rho(), 0.5);
    }
}
