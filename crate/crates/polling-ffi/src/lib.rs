//! C ABI for the polling analysis library.
//!
//! Scenarios and solved grids are opaque handles created and freed here;
//! every computation returns a [`PollingStatus`] and writes results through
//! out-pointers. The most recent error message is kept per thread and can
//! be copied out with [`polling_last_error_message`]. All functions catch
//! panics at the boundary and report them as [`PollingStatus::Panic`].
//!
//! The C header is generated into `include/polling.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use polling_core::exhaustive::{
    exhaustive_mean_delivery, exhaustive_mean_sojourn, expected_waiting_customers, solve_fk,
    GridFunction,
};
use polling_core::limits::{exhaustive_limits, gg_limits, Regime};
use polling_core::policy::Policy;
use polling_core::sim::{lst_probe, simulate, ProbeMetric, SimulationConfig};
use polling_core::{gg, scenario, Error, SystemParameters};

/// Result of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PollingStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Scenario or argument validation failed; see the error message.
    InvalidConfig = 3,
    /// The location density vanishes at a point the solver must use.
    NonPositiveDensity = 4,
    /// The solver grid is not a contraction at any scanned shift.
    RegularityViolation = 5,
    /// A grid handle was used with a scenario it was not solved for.
    GridMismatch = 6,
    /// A panic was caught at the boundary.
    Panic = 7,
}

/// Service discipline selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PollingPolicy {
    GloballyGated = 0,
    Exhaustive = 1,
}

impl From<PollingPolicy> for Policy {
    fn from(p: PollingPolicy) -> Policy {
        match p {
            PollingPolicy::GloballyGated => Policy::GloballyGated,
            PollingPolicy::Exhaustive => Policy::Exhaustive,
        }
    }
}

/// Traffic regime selector for limit computations.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PollingRegime {
    Light = 0,
    Heavy = 1,
}

/// Metric selector for simulation estimates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PollingSimMetric {
    MeanSojourn = 0,
    MeanDelivery = 1,
    WaitingCustomers = 2,
    CycleMean = 3,
    CycleSecondMoment = 4,
    WorkFraction = 5,
}

/// Opaque scenario handle wrapping a validated parameter set.
pub struct PollingScenario {
    params: SystemParameters,
}

/// Opaque handle holding a solved kernel grid together with the scenario
/// it was solved for.
pub struct PollingGrid {
    params: SystemParameters,
    grid: GridFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_from(err: &Error) -> PollingStatus {
    set_last_error(&err.to_string());
    match err {
        Error::InvalidConfig(_) => PollingStatus::InvalidConfig,
        Error::NonPositiveDensity { .. } => PollingStatus::NonPositiveDensity,
        Error::RegularityViolation { .. } => PollingStatus::RegularityViolation,
        Error::GridMismatch => PollingStatus::GridMismatch,
    }
}

fn guarded(body: impl FnOnce() -> PollingStatus) -> PollingStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&message);
            PollingStatus::Panic
        }
    }
}

/// Copies the current thread's last error message into `buffer` as a
/// NUL-terminated string, truncating if needed, and returns the full
/// message length in bytes (excluding the NUL). With a null buffer or
/// zero capacity, nothing is written and only the length is returned.
///
/// # Safety
/// `buffer` must either be null or point to at least `capacity` writable
/// bytes.
#[no_mangle]
pub unsafe extern "C" fn polling_last_error_message(
    buffer: *mut c_char,
    capacity: usize,
) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let written = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, written);
            *buffer.add(written) = 0;
        }
        bytes.len()
    })
}

/// Parses a scenario from JSON and writes a new handle to `out`.
/// The handle must be released with [`polling_scenario_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_scenario_from_json(
    json: *const c_char,
    out: *mut *mut PollingScenario,
) -> PollingStatus {
    if json.is_null() || out.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_last_error("scenario JSON is not valid UTF-8");
            return PollingStatus::InvalidUtf8;
        }
    };
    guarded(|| match scenario::parse_scenario(text) {
        Ok(params) => {
            *out = Box::into_raw(Box::new(PollingScenario { params }));
            PollingStatus::Ok
        }
        Err(e) => status_from(&e),
    })
}

/// Releases a scenario handle. A null handle is ignored.
///
/// # Safety
/// `scenario` must be null or a pointer previously returned by
/// [`polling_scenario_from_json`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn polling_scenario_free(scenario: *mut PollingScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

unsafe fn write_value(
    scenario: *const PollingScenario,
    out: *mut f64,
    f: impl FnOnce(&SystemParameters) -> f64,
) -> PollingStatus {
    if scenario.is_null() || out.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let params = &(*scenario).params;
    guarded(AssertUnwindSafe(|| {
        *out = f(params);
        PollingStatus::Ok
    }))
}

/// Writes the utilization of the scenario.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_scenario_rho(
    scenario: *const PollingScenario,
    out: *mut f64,
) -> PollingStatus {
    write_value(scenario, out, |p| p.rho())
}

/// Writes the mean cycle length of the scenario.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_scenario_mean_cycle(
    scenario: *const PollingScenario,
    out: *mut f64,
) -> PollingStatus {
    write_value(scenario, out, |p| p.mean_cycle())
}

/// Writes the exact mean batch sojourn time under the globally gated
/// policy.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_gg_mean_sojourn(
    scenario: *const PollingScenario,
    out: *mut f64,
) -> PollingStatus {
    write_value(scenario, out, gg::gg_mean_sojourn)
}

/// Writes the exact mean time to delivery under the globally gated policy.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_gg_mean_delivery(
    scenario: *const PollingScenario,
    out: *mut f64,
) -> PollingStatus {
    write_value(scenario, out, gg::gg_mean_delivery)
}

/// Writes the cycle length transform E[exp(-omega C)] under the globally
/// gated policy.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_gg_cycle_lst(
    scenario: *const PollingScenario,
    omega: f64,
    out: *mut f64,
) -> PollingStatus {
    if !omega.is_finite() || omega < 0.0 {
        set_last_error("transform argument omega must be finite and nonnegative");
        return PollingStatus::InvalidConfig;
    }
    write_value(scenario, out, |p| gg::cycle_lst(p, omega))
}

/// Writes the time-average number of waiting customers under the
/// exhaustive policy.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_expected_waiting_customers(
    scenario: *const PollingScenario,
    out: *mut f64,
) -> PollingStatus {
    write_value(scenario, out, expected_waiting_customers)
}

/// Writes the traffic limit pair for one policy and regime. In the light
/// regime these are limiting means; in the heavy regime they are limits of
/// the (1 - rho)-scaled means.
///
/// # Safety
/// `scenario` must be a live handle; `sojourn` and `delivery` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn polling_limit(
    scenario: *const PollingScenario,
    policy: PollingPolicy,
    regime: PollingRegime,
    sojourn: *mut f64,
    delivery: *mut f64,
) -> PollingStatus {
    if scenario.is_null() || sojourn.is_null() || delivery.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let params = &(*scenario).params;
    let regime = match regime {
        PollingRegime::Light => Regime::Light,
        PollingRegime::Heavy => Regime::Heavy,
    };
    guarded(AssertUnwindSafe(|| {
        let report = match policy {
            PollingPolicy::GloballyGated => gg_limits(params, regime),
            PollingPolicy::Exhaustive => exhaustive_limits(params, regime),
        };
        *sojourn = report.sojourn_limit;
        *delivery = report.delivery_limit;
        PollingStatus::Ok
    }))
}

/// Solves the batch-coupling kernel on an `n` by `n` grid to tolerance
/// `delta` and writes a new grid handle to `out`. The handle must be
/// released with [`polling_grid_free`].
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_solve_fk(
    scenario: *const PollingScenario,
    n: usize,
    delta: f64,
    out: *mut *mut PollingGrid,
) -> PollingStatus {
    if scenario.is_null() || out.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let params = (*scenario).params.clone();
    guarded(AssertUnwindSafe(|| match solve_fk(&params, n, delta) {
        Ok((grid, _)) => {
            *out = Box::into_raw(Box::new(PollingGrid { params, grid }));
            PollingStatus::Ok
        }
        Err(e) => status_from(&e),
    }))
}

/// Releases a grid handle. A null handle is ignored.
///
/// # Safety
/// `grid` must be null or a pointer previously returned by
/// [`polling_solve_fk`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn polling_grid_free(grid: *mut PollingGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Writes the interpolated kernel density f_K at circle positions
/// `(x, y)`.
///
/// # Safety
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polling_grid_f_k_at(
    grid: *const PollingGrid,
    x: f64,
    y: f64,
    out: *mut f64,
) -> PollingStatus {
    if grid.is_null() || out.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let handle = &*grid;
    guarded(AssertUnwindSafe(
        || match handle.grid.f_k_at(&handle.params, x, y) {
            Ok(v) => {
                *out = v;
                PollingStatus::Ok
            }
            Err(e) => status_from(&e),
        },
    ))
}

unsafe fn write_mean_bound(
    grid: *const PollingGrid,
    value: *mut f64,
    bound: *mut f64,
    f: impl Fn(&SystemParameters, &GridFunction) -> polling_core::Result<(f64, f64)>,
) -> PollingStatus {
    if grid.is_null() || value.is_null() || bound.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let handle = &*grid;
    guarded(AssertUnwindSafe(|| match f(&handle.params, &handle.grid) {
        Ok((v, b)) => {
            *value = v;
            *bound = b;
            PollingStatus::Ok
        }
        Err(e) => status_from(&e),
    }))
}

/// Writes the exhaustive mean batch sojourn time and its certified error
/// bound.
///
/// # Safety
/// `grid` must be a live handle; `value` and `bound` must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn polling_exhaustive_mean_sojourn(
    grid: *const PollingGrid,
    value: *mut f64,
    bound: *mut f64,
) -> PollingStatus {
    write_mean_bound(grid, value, bound, exhaustive_mean_sojourn)
}

/// Writes the exhaustive mean time to delivery and its certified error
/// bound.
///
/// # Safety
/// `grid` must be a live handle; `value` and `bound` must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn polling_exhaustive_mean_delivery(
    grid: *const PollingGrid,
    value: *mut f64,
    bound: *mut f64,
) -> PollingStatus {
    write_mean_bound(grid, value, bound, exhaustive_mean_delivery)
}

fn build_sim_config(
    params: &SystemParameters,
    policy: PollingPolicy,
    warmup_batches: i64,
    measured_batches: u64,
    replications: u32,
    seed: u64,
) -> SimulationConfig {
    let mut config = SimulationConfig::new(params.clone(), policy.into());
    if warmup_batches >= 0 {
        config.warmup_batches = warmup_batches as u64;
    }
    config.measured_batches = measured_batches;
    config.replications = replications;
    config.seed = seed;
    config
}

/// Runs the simulator and writes the mean and 95% confidence half-width
/// of one metric. A negative `warmup_batches` selects the default warmup
/// of ten mean cycles of arrivals.
///
/// # Safety
/// `scenario` must be a live handle; `mean` and `ci_half_width` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn polling_simulate_metric(
    scenario: *const PollingScenario,
    policy: PollingPolicy,
    metric: PollingSimMetric,
    warmup_batches: i64,
    measured_batches: u64,
    replications: u32,
    seed: u64,
    mean: *mut f64,
    ci_half_width: *mut f64,
) -> PollingStatus {
    if scenario.is_null() || mean.is_null() || ci_half_width.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let params = &(*scenario).params;
    let name = match metric {
        PollingSimMetric::MeanSojourn => "esb",
        PollingSimMetric::MeanDelivery => "ed",
        PollingSimMetric::WaitingCustomers => "el",
        PollingSimMetric::CycleMean => "cycle_mean",
        PollingSimMetric::CycleSecondMoment => "cycle_second_moment",
        PollingSimMetric::WorkFraction => "work_fraction",
    };
    guarded(AssertUnwindSafe(|| {
        let config =
            build_sim_config(params, policy, warmup_batches, measured_batches, replications, seed);
        match simulate(&config) {
            Ok(estimates) => {
                let est = estimates
                    .iter()
                    .find(|e| e.metric == name)
                    .expect("metric present");
                *mean = est.mean;
                *ci_half_width = est.ci_half_width;
                PollingStatus::Ok
            }
            Err(e) => status_from(&e),
        }
    }))
}

/// Runs the simulator and writes the empirical transform E[exp(-omega X)]
/// for the cycle length (metric 0), delivery time (1), or sojourn time
/// (2), with its 95% confidence half-width. A negative `warmup_batches`
/// selects the default warmup.
///
/// # Safety
/// `scenario` must be a live handle; `mean` and `ci_half_width` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn polling_simulate_lst(
    scenario: *const PollingScenario,
    policy: PollingPolicy,
    metric: u32,
    omega: f64,
    warmup_batches: i64,
    measured_batches: u64,
    replications: u32,
    seed: u64,
    mean: *mut f64,
    ci_half_width: *mut f64,
) -> PollingStatus {
    if scenario.is_null() || mean.is_null() || ci_half_width.is_null() {
        set_last_error("null pointer argument");
        return PollingStatus::NullPointer;
    }
    let probe = match metric {
        0 => ProbeMetric::Cycle,
        1 => ProbeMetric::Delivery,
        2 => ProbeMetric::Sojourn,
        _ => {
            set_last_error("lst metric must be 0 (cycle), 1 (delivery), or 2 (sojourn)");
            return PollingStatus::InvalidConfig;
        }
    };
    let params = &(*scenario).params;
    guarded(AssertUnwindSafe(|| {
        let config =
            build_sim_config(params, policy, warmup_batches, measured_batches, replications, seed);
        match lst_probe(&config, probe, omega) {
            Ok(est) => {
                *mean = est.mean;
                *ci_half_width = est.ci_half_width;
                PollingStatus::Ok
            }
            Err(e) => status_from(&e),
        }
    }))
}
