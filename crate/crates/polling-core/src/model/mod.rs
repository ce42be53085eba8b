//! Model primitives: circle geometry, location density, batch size law,
//! service time law, and the combined system description.

pub(crate) mod poly;

pub mod batch;
pub mod location;
pub mod params;
pub mod service;

pub use batch::BatchSizeDistribution;
pub use location::{circle_distance, fold_position, LocationDensity};
pub use params::SystemParameters;
pub use service::ServiceDistribution;
