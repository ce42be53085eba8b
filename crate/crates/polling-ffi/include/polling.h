#ifndef POLLING_FFI_H
#define POLLING_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Service discipline selector.
 */
typedef enum PollingPolicy {
  PollingPolicy_GloballyGated = 0,
  PollingPolicy_Exhaustive = 1,
} PollingPolicy;

/**
 * Traffic regime selector for limit computations.
 */
typedef enum PollingRegime {
  PollingRegime_Light = 0,
  PollingRegime_Heavy = 1,
} PollingRegime;

/**
 * Metric selector for simulation estimates.
 */
typedef enum PollingSimMetric {
  PollingSimMetric_MeanSojourn = 0,
  PollingSimMetric_MeanDelivery = 1,
  PollingSimMetric_WaitingCustomers = 2,
  PollingSimMetric_CycleMean = 3,
  PollingSimMetric_CycleSecondMoment = 4,
  PollingSimMetric_WorkFraction = 5,
} PollingSimMetric;

/**
 * Result of every API call.
 */
typedef enum PollingStatus {
  PollingStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  PollingStatus_NullPointer = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PollingStatus_InvalidUtf8 = 2,
  /**
   * Scenario or argument validation failed; see the error message.
   */
  PollingStatus_InvalidConfig = 3,
  /**
   * The location density vanishes at a point the solver must use.
   */
  PollingStatus_NonPositiveDensity = 4,
  /**
   * The solver grid is not a contraction at any scanned shift.
   */
  PollingStatus_RegularityViolation = 5,
  /**
   * A grid handle was used with a scenario it was not solved for.
   */
  PollingStatus_GridMismatch = 6,
  /**
   * A panic was caught at the boundary.
   */
  PollingStatus_Panic = 7,
} PollingStatus;

/**
 * Opaque handle holding a solved kernel grid together with the scenario
 * it was solved for.
 */
typedef struct PollingGrid PollingGrid;

/**
 * Opaque scenario handle wrapping a validated parameter set.
 */
typedef struct PollingScenario PollingScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the current thread's last error message into `buffer` as a
 * NUL-terminated string, truncating if needed, and returns the full
 * message length in bytes (excluding the NUL). With a null buffer or
 * zero capacity, nothing is written and only the length is returned.
 *
 * # Safety
 * `buffer` must either be null or point to at least `capacity` writable
 * bytes.
 */
uintptr_t polling_last_error_message(char *buffer, uintptr_t capacity);

/**
 * Parses a scenario from JSON and writes a new handle to `out`.
 * The handle must be released with [`polling_scenario_free`].
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum PollingStatus polling_scenario_from_json(const char *json, struct PollingScenario **out);

/**
 * Releases a scenario handle. A null handle is ignored.
 *
 * # Safety
 * `scenario` must be null or a pointer previously returned by
 * [`polling_scenario_from_json`] that has not been freed yet.
 */
void polling_scenario_free(struct PollingScenario *scenario);

/**
 * Writes the utilization of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_scenario_rho(const struct PollingScenario *scenario, double *out);

/**
 * Writes the mean cycle length of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_scenario_mean_cycle(const struct PollingScenario *scenario, double *out);

/**
 * Writes the exact mean batch sojourn time under the globally gated
 * policy.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_gg_mean_sojourn(const struct PollingScenario *scenario, double *out);

/**
 * Writes the exact mean time to delivery under the globally gated policy.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_gg_mean_delivery(const struct PollingScenario *scenario, double *out);

/**
 * Writes the cycle length transform E[exp(-omega C)] under the globally
 * gated policy.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_gg_cycle_lst(const struct PollingScenario *scenario,
                                        double omega,
                                        double *out);

/**
 * Writes the time-average number of waiting customers under the
 * exhaustive policy.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_expected_waiting_customers(const struct PollingScenario *scenario,
                                                      double *out);

/**
 * Writes the traffic limit pair for one policy and regime. In the light
 * regime these are limiting means; in the heavy regime they are limits of
 * the (1 - rho)-scaled means.
 *
 * # Safety
 * `scenario` must be a live handle; `sojourn` and `delivery` must be
 * valid pointers.
 */
enum PollingStatus polling_limit(const struct PollingScenario *scenario,
                                 enum PollingPolicy policy,
                                 enum PollingRegime regime,
                                 double *sojourn,
                                 double *delivery);

/**
 * Solves the batch-coupling kernel on an `n` by `n` grid to tolerance
 * `delta` and writes a new grid handle to `out`. The handle must be
 * released with [`polling_grid_free`].
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_solve_fk(const struct PollingScenario *scenario,
                                    uintptr_t n,
                                    double delta,
                                    struct PollingGrid **out);

/**
 * Releases a grid handle. A null handle is ignored.
 *
 * # Safety
 * `grid` must be null or a pointer previously returned by
 * [`polling_solve_fk`] that has not been freed yet.
 */
void polling_grid_free(struct PollingGrid *grid);

/**
 * Writes the interpolated kernel density f_K at circle positions
 * `(x, y)`.
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid pointer.
 */
enum PollingStatus polling_grid_f_k_at(const struct PollingGrid *grid,
                                       double x,
                                       double y,
                                       double *out);

/**
 * Writes the exhaustive mean batch sojourn time and its certified error
 * bound.
 *
 * # Safety
 * `grid` must be a live handle; `value` and `bound` must be valid
 * pointers.
 */
enum PollingStatus polling_exhaustive_mean_sojourn(const struct PollingGrid *grid,
                                                   double *value,
                                                   double *bound);

/**
 * Writes the exhaustive mean time to delivery and its certified error
 * bound.
 *
 * # Safety
 * `grid` must be a live handle; `value` and `bound` must be valid
 * pointers.
 */
enum PollingStatus polling_exhaustive_mean_delivery(const struct PollingGrid *grid,
                                                    double *value,
                                                    double *bound);

/**
 * Runs the simulator and writes the mean and 95% confidence half-width
 * of one metric. A negative `warmup_batches` selects the default warmup
 * of ten mean cycles of arrivals.
 *
 * # Safety
 * `scenario` must be a live handle; `mean` and `ci_half_width` must be
 * valid pointers.
 */
enum PollingStatus polling_simulate_metric(const struct PollingScenario *scenario,
                                           enum PollingPolicy policy,
                                           enum PollingSimMetric metric,
                                           int64_t warmup_batches,
                                           uint64_t measured_batches,
                                           uint32_t replications,
                                           uint64_t seed,
                                           double *mean,
                                           double *ci_half_width);

/**
 * Runs the simulator and writes the empirical transform E[exp(-omega X)]
 * for the cycle length (metric 0), delivery time (1), or sojourn time
 * (2), with its 95% confidence half-width. A negative `warmup_batches`
 * selects the default warmup.
 *
 * # Safety
 * `scenario` must be a live handle; `mean` and `ci_half_width` must be
 * valid pointers.
 */
enum PollingStatus polling_simulate_lst(const struct PollingScenario *scenario,
                                        enum PollingPolicy policy,
                                        uint32_t metric,
                                        double omega,
                                        int64_t warmup_batches,
                                        uint64_t measured_batches,
                                        uint32_t replications,
                                        uint64_t seed,
                                        double *mean,
                                        double *ci_half_width);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLLING_FFI_H */
