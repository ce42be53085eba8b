//! Generated-waiting-time kernels for the exhaustive discipline.
//!
//! Each kernel is the expected extra waiting (or extra time to delivery)
//! a tagged customer at position y accrues because the server performs one
//! unit of work, or one stretch of travel, at position x. Clockwise arcs
//! use the zero-arc convention: coincident endpoints mean an empty arc, and
//! the full-circle reading needed inside some limit arguments exists only
//! as a crate-internal variant.

use crate::model::SystemParameters;
use crate::quadrature;

fn arc_pi(params: &SystemParameters, a: f64, b: f64) -> f64 {
    params.location.circular_integral(a, b)
}

/// Extra waiting at y generated by one service at x:
/// E[S(x,y)] = E[B]·exp(ρ∫ₓʸ*π).
pub fn generated_wait_service(params: &SystemParameters, x: f64, y: f64) -> f64 {
    params.service.mean() * (params.rho() * arc_pi(params, x, y)).exp()
}

/// Residual variant: the in-progress service found at x contributes its
/// residual E[B²]/(2E[B]) in place of a full service time.
pub fn generated_wait_service_residual(params: &SystemParameters, x: f64, y: f64) -> f64 {
    params.service.second_moment() / (2.0 * params.service.mean())
        * (params.rho() * arc_pi(params, x, y)).exp()
}

/// Extra waiting at y generated by travel across the arc from x to y:
/// E[T(x,y)] = α∫ₓʸ* exp(ρ∫ᵤʸ*π) du.
pub fn generated_wait_travel(params: &SystemParameters, x: f64, y: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    let rho = params.rho();
    let cdf_y = params.location.cdf(y);
    let cuts = params.location.breakpoints();
    // On the arc u ∈ x→y, ∫ᵤʸ*π = Π(y) − Π(u), plus a full lap when u > y.
    let tail = |u: f64, wrapped: bool| {
        let mass = if wrapped {
            1.0 - params.location.cdf(u) + cdf_y
        } else {
            cdf_y - params.location.cdf(u)
        };
        (rho * mass).exp()
    };
    let integral = if x < y {
        quadrature::integrate_split(&|u| tail(u, false), x, y, &cuts, 1e-12)
    } else {
        quadrature::integrate_split(&|u| tail(u, true), x, 1.0, &cuts, 1e-12)
            + quadrature::integrate_split(&|u| tail(u, false), 0.0, y, &cuts, 1e-12)
    };
    params.alpha * integral
}

/// Full-circle reading of the travel kernel at coincident endpoints:
/// α∫ over the whole circle of exp(ρ·(π-mass from u clockwise to x)) du.
/// At x = y the zero-arc reading (value 0) and this one both appear in
/// limit arguments; `generated_wait_travel` returns the zero-arc value, so
/// the full-circle case must be requested explicitly through this function.
pub fn generated_wait_travel_full_circle(params: &SystemParameters, x: f64) -> f64 {
    let rho = params.rho();
    let cdf_x = params.location.cdf(x);
    let cuts = params.location.breakpoints();
    let tail = |u: f64| {
        let mass = if u < x {
            cdf_x - params.location.cdf(u)
        } else {
            1.0 - params.location.cdf(u) + cdf_x
        };
        (rho * mass).exp()
    };
    params.alpha * quadrature::integrate_split(&tail, 0.0, 1.0, &cuts, 1e-12)
}

/// Extra time to delivery generated by one service at x, for a batch whose
/// last-served customer sits at y. With F(x) = ∫ₓ¹π:
/// x ≤ y: E[B]exp(ρF(x)); x > y: E[B][exp(ρ+ρF(x)) − ρF(x)exp(ρF(x))].
pub fn generated_delivery_service(params: &SystemParameters, x: f64, y: f64) -> f64 {
    let rho = params.rho();
    let eb = params.service.mean();
    let f = 1.0 - params.location.cdf(x);
    if x <= y {
        eb * (rho * f).exp()
    } else {
        eb * ((rho + rho * f).exp() - rho * f * (rho * f).exp())
    }
}

/// Extra time to delivery generated by the travel still ahead of the
/// server at x: the service-kernel integrand integrated over the remaining
/// travel, one extra lap included when x > y.
pub fn generated_delivery_travel(params: &SystemParameters, x: f64, y: f64) -> f64 {
    let rho = params.rho();
    let cuts = params.location.breakpoints();
    let direct = |u: f64| (rho * (1.0 - params.location.cdf(u))).exp();
    let lapped = |u: f64| {
        let rf = rho * (1.0 - params.location.cdf(u));
        (rho + rf).exp() - rf * rf.exp()
    };
    if x <= y {
        params.alpha * quadrature::integrate_split(&direct, x, 1.0, &cuts, 1e-12)
    } else {
        params.alpha * quadrature::integrate_split(&lapped, x, 1.0, &cuts, 1e-12)
            + params.alpha * quadrature::integrate_split(&direct, 0.0, 1.0, &cuts, 1e-12)
    }
}
