//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by construction, solving, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set or configuration violates a precondition.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The location density is zero (or negative) somewhere the grid solver
    /// must evaluate it. The solver requires strictly positive density at
    /// every grid node; densities with zero segments can be regularized by
    /// adding a uniform floor of about 1e-8 and renormalizing.
    #[error(
        "non-positive location density at x = {at}: the grid solver needs \
         \u{3c0}(x) > 0 at every node; add a small uniform floor (e.g. 1e-8) \
         to the density and renormalize"
    )]
    NonPositiveDensity { at: f64 },

    /// The left-Riemann sum of the density exceeds 1/rho on the solver grid,
    /// so the discrete iteration is not a contraction, and no scanned grid
    /// shift repaired it. Increasing the resolution usually helps.
    #[error(
        "grid regularity violated: (1/{n})\u{b7}\u{3a3}\u{3c0}(m/{n}) = {riemann_sum} > 1/\u{3c1} = \
         {limit}, and no shift in the scanned set restored it; increase the \
         grid resolution"
    )]
    RegularityViolation {
        n: usize,
        riemann_sum: f64,
        limit: f64,
    },

    /// A solved grid was paired with parameters other than the ones it was
    /// solved for.
    #[error("grid mismatch: the grid was solved for different parameters")]
    GridMismatch,
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
