//! Analysis of the exhaustive discipline: generated-wait kernels, the grid
//! solver for the spread's batch-coupling component, the spread itself, and
//! station-level means assembled from them.

pub mod kernels;
pub mod means;
pub mod solver;
pub mod spread;

pub use kernels::{
    generated_delivery_service, generated_delivery_travel, generated_wait_service,
    generated_wait_service_residual, generated_wait_travel,
};
pub use means::{
    exhaustive_mean_delivery, exhaustive_mean_sojourn, expected_waiting_customers, spread_mass,
};
pub use solver::{solve_fk, GridFunction, SolverReport};
pub use spread::{
    fixed_point_residual, partial_spread, spread, spread_decomposition, ResidualReport,
    SpreadDecomposition,
};
