//! Exact and numerical performance analysis of a continuous polling system
//! on a circle with Poisson batch arrivals, under globally-gated and
//! exhaustive service, plus a discrete-event simulator for cross-checks.

pub mod cli;
pub mod error;
pub mod exhaustive;
pub mod gg;
pub mod limits;
pub mod policy;
pub mod model;
pub mod quadrature;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    BatchSizeDistribution, LocationDensity, ServiceDistribution, SystemParameters,
};
