//! Model-wide invariants, checked by randomized property tests where the
//! statement quantifies over parameters and by fixed scenarios where it
//! names specific ones.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use polling_core::exhaustive::{
    exhaustive_mean_delivery, exhaustive_mean_sojourn, expected_waiting_customers,
    fixed_point_residual, solve_fk,
};
use polling_core::gg;
use polling_core::limits::{gg_limits, Regime};
use polling_core::model::{
    BatchSizeDistribution, LocationDensity, ServiceDistribution, SystemParameters,
};
use polling_core::policy::Policy;
use polling_core::quadrature;
use polling_core::sim::{simulate, SimulationConfig, SimulationEstimate};
use polling_core::Error;

fn linear_density() -> LocationDensity {
    LocationDensity::piecewise(vec![(0.0, vec![0.5, 1.0])]).unwrap()
}

fn step_density() -> LocationDensity {
    LocationDensity::piecewise(vec![
        (0.0, vec![2.5]),
        (0.2, vec![1.0]),
        (0.5, vec![0.4]),
    ])
    .unwrap()
}

fn hump_density() -> LocationDensity {
    LocationDensity::piecewise(vec![(0.0, vec![0.4, 3.6, -3.6])]).unwrap()
}

fn any_density() -> impl Strategy<Value = LocationDensity> {
    prop_oneof![
        Just(LocationDensity::uniform()),
        Just(linear_density()),
        Just(step_density()),
        Just(hump_density()),
    ]
}

fn any_batch() -> impl Strategy<Value = BatchSizeDistribution> {
    prop_oneof![
        (1usize..=12).prop_map(|k| BatchSizeDistribution::deterministic(k).unwrap()),
        // Means just above 1 are rejected by the truncation-mass rule, so
        // the strategy starts at 2.
        (2.0f64..12.0).prop_map(|m| BatchSizeDistribution::shifted_poisson(m).unwrap()),
        proptest::collection::vec(0.05f64..1.0, 1..6).prop_map(|weights| {
            let total: f64 = weights.iter().sum();
            let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
            BatchSizeDistribution::from_pmf(pmf).unwrap()
        }),
    ]
}

fn any_service() -> impl Strategy<Value = ServiceDistribution> {
    prop_oneof![
        (0.1f64..3.0).prop_map(|b| ServiceDistribution::deterministic(b).unwrap()),
        (0.1f64..3.0).prop_map(|m| ServiceDistribution::exponential(m).unwrap()),
        (0.1f64..3.0, 1.0f64..4.0).prop_map(|(m, spread)| {
            ServiceDistribution::from_moments(m, spread * m * m).unwrap()
        }),
    ]
}

fn build(
    rho: f64,
    alpha: f64,
    batch: BatchSizeDistribution,
    service: ServiceDistribution,
    density: LocationDensity,
) -> SystemParameters {
    let lambda = rho / (batch.mean() * service.mean());
    SystemParameters::new(lambda, alpha, batch, service, density).unwrap()
}

fn find<'a>(estimates: &'a [SimulationEstimate], name: &str) -> &'a SimulationEstimate {
    estimates
        .iter()
        .find(|e| e.metric == name)
        .unwrap_or_else(|| panic!("metric {name} missing"))
}

proptest! {
    #[test]
    fn splitting_the_circle_preserves_total_mass(
        density in any_density(),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        prop_assume!(a != b);
        // The two arcs partition the circle, and segment antiderivatives
        // are exact, so only rounding separates the sum from 1.
        let total = density.circular_integral(a, b) + density.circular_integral(b, a);
        prop_assert!((total - 1.0).abs() <= 1e-12, "total = {total}");
    }

    #[test]
    fn server_location_density_integrates_to_one(
        rho in 0.05f64..0.9,
        batch in any_batch(),
        service in any_service(),
        density in any_density(),
    ) {
        let p = build(rho, 1.0, batch, service, density);
        let cuts = p.location.breakpoints();
        let mass = quadrature::integrate_split(
            &|y| p.server_location_density(y),
            0.0,
            1.0,
            &cuts,
            1e-12,
        );
        prop_assert!((mass - 1.0).abs() <= 1e-9, "mass = {mass}");
    }

    #[test]
    fn pgf_derivatives_match_the_moments(batch in any_batch()) {
        let scale = |v: f64| v.abs().max(1.0);
        let at_one = batch.pgf(1.0);
        prop_assert!((at_one - 1.0).abs() <= 1e-12);
        let d1 = batch.pgf_derivative(1.0);
        prop_assert!(
            (d1 - batch.mean()).abs() <= 1e-8 * scale(d1),
            "first derivative {d1} vs mean {}", batch.mean()
        );
        let d2 = batch.pgf_second_derivative(1.0);
        prop_assert!(
            (d2 - batch.factorial_second_moment()).abs() <= 1e-8 * scale(d2),
            "second derivative {d2} vs factorial moment {}",
            batch.factorial_second_moment()
        );
    }

    #[test]
    fn gated_delivery_dominates_sojourn_and_ignores_locations(
        rho in 0.05f64..0.9,
        alpha in 0.2f64..4.0,
        batch in any_batch(),
        service in any_service(),
        density in any_density(),
        other_density in any_density(),
    ) {
        let p = build(rho, alpha, batch.clone(), service.clone(), density);
        let sojourn = gg::gg_mean_sojourn(&p);
        let delivery = gg::gg_mean_delivery(&p);
        prop_assert!(delivery >= sojourn, "{delivery} < {sojourn}");

        let q = build(rho, alpha, batch, service, other_density);
        prop_assert_eq!(delivery.to_bits(), gg::gg_mean_delivery(&q).to_bits());
    }

    #[test]
    fn transform_probes_start_at_one_and_decrease(
        rho in 0.05f64..0.9,
        batch in any_batch(),
        service in any_service(),
        density in any_density(),
        omega_step in 0.05f64..2.0,
    ) {
        let p = build(rho, 1.0, batch, service, density);
        for lst in [gg::cycle_lst, gg::gg_delivery_lst, gg::gg_sojourn_lst] {
            let mut last = lst(&p, 0.0);
            prop_assert!((last - 1.0).abs() <= 1e-10);
            for k in 1..=4 {
                let value = lst(&p, omega_step * k as f64);
                prop_assert!(value > 0.0 && value <= last + 1e-12);
                last = value;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exhaustive_delivery_dominates_sojourn(
        rho in 0.05f64..0.7,
        batch in any_batch(),
        service in any_service(),
        density in any_density(),
    ) {
        let p = build(rho, 1.0, batch, service, density);
        let (grid, _) = solve_fk(&p, 64, 1e-9).unwrap();
        let (sojourn, _) = exhaustive_mean_sojourn(&p, &grid).unwrap();
        let (delivery, _) = exhaustive_mean_delivery(&p, &grid).unwrap();
        prop_assert!(delivery > sojourn, "{delivery} <= {sojourn}");
    }

    #[test]
    fn iterate_differences_stay_under_the_geometric_envelope(
        rho in 0.1f64..0.92,
        density in any_density(),
        paired in proptest::bool::ANY,
    ) {
        let batch = if paired {
            BatchSizeDistribution::deterministic(2).unwrap()
        } else {
            BatchSizeDistribution::shifted_poisson(3.0).unwrap()
        };
        let p = build(rho, 1.0, batch, ServiceDistribution::deterministic(1.0).unwrap(), density);
        let (_, report) = solve_fk(&p, 64, 1e-9).unwrap();
        let contraction = 1.0 - rho * report.regularity_margin;
        prop_assert!(contraction < 1.0);
        let pi_max = p.location.max_density();
        let first = report.sup_diffs[0];
        for (idx, &diff) in report.sup_diffs.iter().enumerate() {
            let m = idx + 1;
            if m >= 4 {
                let envelope = 4.0 * rho * pi_max * contraction.powi(m as i32 - 2) * first;
                prop_assert!(
                    diff <= envelope * (1.0 + 1e-12),
                    "step {}: {} above {}", m, diff, envelope
                );
            }
        }
    }
}

#[test]
fn residual_stays_within_twice_the_certificate_across_loads() {
    for rho in [0.3, 0.6, 0.9] {
        for density in [LocationDensity::uniform(), step_density()] {
            let p = build(
                rho,
                1.0,
                BatchSizeDistribution::shifted_poisson(3.0).unwrap(),
                ServiceDistribution::exponential(1.0).unwrap(),
                density,
            );
            let (grid, _) = solve_fk(&p, 128, 1e-9).unwrap();
            let residual = fixed_point_residual(&p, &grid).unwrap();
            assert!(
                residual.max_ratio_to_bound <= 2.0,
                "rho = {rho}: ratio {}",
                residual.max_ratio_to_bound
            );
        }
    }
}

/// A solved kernel, rescaled through the density transform, must stay
/// within (1+rho)·pi(y)·rho·E[K(K-1)]/E[K] of the uniform-system kernel at
/// the transformed positions. Both kernels are numerical, so each side
/// also gets its certified pointwise error allowance.
#[test]
fn density_transform_couples_the_kernel_to_the_uniform_system() {
    let batch = BatchSizeDistribution::shifted_poisson(3.0).unwrap();
    let service = ServiceDistribution::deterministic(1.0).unwrap();
    let rho = 0.5;
    let sloped = build(rho, 1.0, batch.clone(), service.clone(), linear_density());
    let uniform = build(rho, 1.0, batch.clone(), service, LocationDensity::uniform());
    let (grid_s, report_s) = solve_fk(&sloped, 128, 1e-9).unwrap();
    let (grid_u, report_u) = solve_fk(&uniform, 128, 1e-9).unwrap();
    let kappa = batch.factorial_second_moment() / batch.mean();

    for i in 0..32 {
        let x = i as f64 / 32.0;
        for j in 0..32 {
            let y = j as f64 / 32.0;
            let pi_x = sloped.location.density(x);
            let pi_y = sloped.location.density(y);
            let lhs = sloped.server_location_density(y)
                * grid_s.f_k_at(&sloped, x, y).unwrap()
                / pi_x;
            let transformed = grid_u
                .f_k_at(
                    &uniform,
                    sloped.location.cdf(x),
                    sloped.location.cdf(y),
                )
                .unwrap();
            let bound = (1.0 + rho) * pi_y * rho * kappa;
            // Certified kernel errors, propagated through each side.
            let slack = pi_y * (report_s.zeta + report_u.zeta);
            let gap = (lhs - pi_y * transformed).abs();
            assert!(
                gap <= bound + slack,
                "at ({x}, {y}): gap {gap} above {bound} + {slack}"
            );
        }
    }
}

#[test]
fn waiting_customer_mean_matches_the_simulated_time_average() {
    let p = build(
        0.6,
        1.0,
        BatchSizeDistribution::shifted_poisson(3.0).unwrap(),
        ServiceDistribution::exponential(1.0).unwrap(),
        linear_density(),
    );
    let analytic = expected_waiting_customers(&p);
    let mut config = SimulationConfig::new(p, Policy::Exhaustive);
    config.measured_batches = 20_000;
    let estimates = simulate(&config).unwrap();
    let el = find(&estimates, "el");
    assert!(
        (analytic - el.mean).abs() <= 3.0 * el.ci_half_width,
        "{analytic} vs {} +- {}",
        el.mean,
        el.ci_half_width
    );
}

#[test]
fn work_fraction_and_cycle_mean_match_for_both_policies() {
    let p = build(
        0.55,
        1.0,
        BatchSizeDistribution::shifted_poisson(3.0).unwrap(),
        ServiceDistribution::exponential(0.8).unwrap(),
        step_density(),
    );
    for policy in [Policy::GloballyGated, Policy::Exhaustive] {
        let mut config = SimulationConfig::new(p.clone(), policy);
        config.measured_batches = 20_000;
        let estimates = simulate(&config).unwrap();
        let work = find(&estimates, "work_fraction");
        assert!(
            (work.mean - p.rho()).abs() <= 3.0 * work.ci_half_width,
            "{policy:?} work fraction {} vs rho {}",
            work.mean,
            p.rho()
        );
        let cycle = find(&estimates, "cycle_mean");
        assert!(
            (cycle.mean - p.mean_cycle()).abs() <= 3.0 * cycle.ci_half_width,
            "{policy:?} cycle mean {} vs {}",
            cycle.mean,
            p.mean_cycle()
        );
    }
}

#[test]
fn narrower_support_behind_the_depot_shortens_gated_sojourns() {
    let sojourn_with_support_at = |c: f64| {
        let density = LocationDensity::piecewise(vec![
            (0.0, vec![0.0]),
            (c, vec![100.0]),
            (c + 0.01, vec![0.0]),
        ])
        .unwrap();
        let p = SystemParameters::new(
            0.5,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            density,
        )
        .unwrap();
        gg::gg_mean_sojourn(&p)
    };
    let values: Vec<f64> = [0.9, 0.5, 0.1, 0.01]
        .iter()
        .map(|&c| sojourn_with_support_at(c))
        .collect();
    for pair in values.windows(2) {
        assert!(
            pair[1] < pair[0],
            "sojourn did not decrease toward the depot: {values:?}"
        );
    }
}

#[test]
fn sampled_locations_match_the_law() {
    let density = LocationDensity::piecewise(vec![
        (0.0, vec![0.4, 3.6, -3.6]),
        (0.5, vec![1.3]),
        (0.8, vec![0.55]),
    ])
    .unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let n = 1_000_000usize;
    let mut draws: Vec<f64> = (0..n).map(|_| density.sample(rng.gen())).collect();
    draws.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    for (i, &x) in draws.iter().enumerate() {
        let cdf = density.cdf(x);
        ks = ks.max(cdf - i as f64 / n as f64);
        ks = ks.max((i + 1) as f64 / n as f64 - cdf);
    }
    // At one million draws the Kolmogorov statistic concentrates near
    // 0.001; 0.005 leaves five standard deviations of headroom.
    assert!(ks <= 0.005, "Kolmogorov distance {ks}");
}

#[test]
fn zero_density_segments_are_rejected_with_guidance() {
    let density = LocationDensity::piecewise(vec![
        (0.0, vec![0.0]),
        (0.25, vec![4.0 / 3.0]),
    ])
    .unwrap();
    let p = SystemParameters::new(
        0.3,
        1.0,
        BatchSizeDistribution::deterministic(2).unwrap(),
        ServiceDistribution::deterministic(1.0).unwrap(),
        density,
    )
    .unwrap();
    match solve_fk(&p, 64, 1e-9) {
        Err(err @ Error::NonPositiveDensity { .. }) => {
            let message = err.to_string();
            assert!(message.contains("floor"), "message: {message}");
            assert!(message.contains("renormalize"), "message: {message}");
        }
        other => panic!("expected a density rejection, got {other:?}"),
    }
}

#[test]
fn heavy_traffic_gap_carries_the_batch_size_sign() {
    let service = ServiceDistribution::exponential(1.0).unwrap();
    let alpha = 2.0;

    // Single-customer batches: the service-driven term vanishes exactly
    // and the scaled sojourn gap is alpha/2 regardless of service moments.
    let single = build(
        0.5,
        alpha,
        BatchSizeDistribution::deterministic(1).unwrap(),
        service.clone(),
        LocationDensity::uniform(),
    );
    let gap = gg_limits(&single, Regime::Heavy).policy_gap_sojourn;
    assert!((gap - alpha / 2.0).abs() <= 1e-12, "gap = {gap}");

    // Any mass on batch sizes above one pulls the gap strictly below.
    for batch in [
        BatchSizeDistribution::deterministic(2).unwrap(),
        BatchSizeDistribution::shifted_poisson(3.0).unwrap(),
        BatchSizeDistribution::from_pmf(vec![0.7, 0.0, 0.3]).unwrap(),
    ] {
        let p = build(0.5, alpha, batch, service.clone(), LocationDensity::uniform());
        let gap = gg_limits(&p, Regime::Heavy).policy_gap_sojourn;
        assert!(gap < alpha / 2.0, "gap = {gap}");
    }
}

/// One-sided differences at 0 carry an O(step) bias from the second
/// moment, which exceeds the tolerance; extrapolating two step sizes
/// cancels that term and leaves an O(step squared) remainder.
fn derivative_at_zero(lst: impl Fn(f64) -> f64, step: f64) -> f64 {
    let one_sided = |h: f64| (1.0 - lst(h)) / h;
    2.0 * one_sided(step) - one_sided(2.0 * step)
}

#[test]
fn transform_slopes_at_zero_recover_the_means() {
    let scenarios = [
        build(
            0.5,
            1.0,
            BatchSizeDistribution::deterministic(1).unwrap(),
            ServiceDistribution::deterministic(1.0).unwrap(),
            LocationDensity::uniform(),
        ),
        build(
            0.4,
            1.5,
            BatchSizeDistribution::shifted_poisson(3.0).unwrap(),
            ServiceDistribution::exponential(0.7).unwrap(),
            linear_density(),
        ),
    ];
    for p in scenarios {
        let pairs: [(&str, Box<dyn Fn(f64) -> f64>, f64); 2] = [
            (
                "delivery",
                Box::new(|w| gg::gg_delivery_lst(&p, w)),
                gg::gg_mean_delivery(&p),
            ),
            (
                "sojourn",
                Box::new(|w| gg::gg_sojourn_lst(&p, w)),
                gg::gg_mean_sojourn(&p),
            ),
        ];
        for (label, lst, mean) in pairs {
            let slope = derivative_at_zero(lst, 1e-5);
            assert!(
                (slope - mean).abs() <= 1e-5 * mean,
                "{label}: slope {slope} vs mean {mean}"
            );
        }
    }
}
