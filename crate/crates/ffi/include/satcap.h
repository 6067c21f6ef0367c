#ifndef SATCAP_H
#define SATCAP_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SatcapStatus {
  SATCAP_STATUS_OK = 0,
  SATCAP_STATUS_INVALID_ARGUMENT = 1,
  SATCAP_STATUS_NULL_POINTER = 2,
  SATCAP_STATUS_BUFFER_TOO_SMALL = 3,
  SATCAP_STATUS_BEAM_SATURATED = 4,
  SATCAP_STATUS_UNDEFINED = 5,
  SATCAP_STATUS_NON_CONVERGENCE = 6,
  SATCAP_STATUS_IO = 7,
  SATCAP_STATUS_PANIC = 8,
} SatcapStatus;

typedef enum SatcapModel {
  SATCAP_MODEL_SHANNON = 0,
  SATCAP_MODEL_DVBS2 = 1,
} SatcapModel;

typedef enum SatcapTermination {
  SATCAP_TERMINATION_ALL_SATISFIED = 0,
  SATCAP_TERMINATION_POWER_BUDGET = 1,
  SATCAP_TERMINATION_SLOTS_SATURATED = 2,
  SATCAP_TERMINATION_ITERATION_LIMIT = 3,
  SATCAP_TERMINATION_SINGLE_PASS = 4,
} SatcapTermination;

typedef enum SatcapCost {
  SATCAP_COST_NTH_ORDER = 0,
  SATCAP_COST_FAIRNESS = 1,
} SatcapCost;

/**
 * Opaque allocation result.
 */
typedef struct SatcapOutcome SatcapOutcome;

/**
 * Opaque built scenario.
 */
typedef struct SatcapScenario SatcapScenario;

/**
 * Link budget, dB quantities except `sir_y` and `uplink_sinr_z` (linear;
 * `INFINITY` drops the term).
 */
typedef struct SatcapLinkBudget {
  double p_sat_dbw;
  double obo_db;
  double l_repeater_db;
  double l_antenna_db;
  double l_propagation_db;
  double g_tx_dbi;
  double gt_ground_dbk;
  double b_c_hz;
  double sir_y;
  double uplink_sinr_z;
} SatcapLinkBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *satcap_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *satcap_version(void);

/**
 * Load and build a scenario from a TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SatcapStatus satcap_scenario_load(const char *path, struct SatcapScenario **out);

/**
 * Build a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum SatcapStatus satcap_scenario_from_toml(const char *toml, struct SatcapScenario **out);

/**
 * # Safety
 * `s` must come from a scenario constructor and not be freed twice.
 */
void satcap_scenario_free(struct SatcapScenario *s);

/**
 * Number of beams, 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live scenario handle.
 */
uintptr_t satcap_scenario_beam_count(const struct SatcapScenario *s);

/**
 * Slot bandwidth `B_tot / N` in Hz.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
enum SatcapStatus satcap_scenario_slot_bandwidth(const struct SatcapScenario *s, double *out);

/**
 * Run the iterative allocator on a scenario.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
enum SatcapStatus satcap_allocate_p1(const struct SatcapScenario *s,
                                     enum SatcapModel model,
                                     uintptr_t max_iterations,
                                     struct SatcapOutcome **out);

/**
 * Run the 7-color uniform baseline; credited rates are capped at demand.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
enum SatcapStatus satcap_allocate_baseline(const struct SatcapScenario *s,
                                           enum SatcapModel model,
                                           struct SatcapOutcome **out);

/**
 * # Safety
 * `o` must come from an allocation call and not be freed twice.
 */
void satcap_outcome_free(struct SatcapOutcome *o);

/**
 * Copy per-beam physical rates (bits/s) into `buf`, which holds `len` values.
 *
 * # Safety
 * `o` must be a live outcome; `buf` must hold `len` writable doubles.
 */
enum SatcapStatus satcap_outcome_rates(const struct SatcapOutcome *o, double *buf, uintptr_t len);

/**
 * Copy per-beam credited rates, `min(R, R_hat)`.
 *
 * # Safety
 * As [`satcap_outcome_rates`].
 */
enum SatcapStatus satcap_outcome_credited_rates(const struct SatcapOutcome *o,
                                                double *buf,
                                                uintptr_t len);

/**
 * # Safety
 * `o` must be a live outcome; `out` must be writable.
 */
enum SatcapStatus satcap_outcome_power_used(const struct SatcapOutcome *o, double *out);

/**
 * Outer iterations run, 0 for a null handle.
 *
 * # Safety
 * `o` must be null or a live outcome.
 */
uintptr_t satcap_outcome_iterations(const struct SatcapOutcome *o);

/**
 * # Safety
 * `o` must be a live outcome; `out` must be writable.
 */
enum SatcapStatus satcap_outcome_termination(const struct SatcapOutcome *o,
                                             enum SatcapTermination *out);

/**
 * Interference-free slot allocation. `weights` may be null (all ones);
 * `slots_out` receives `k` values.
 *
 * # Safety
 * `demand` and `gamma` (and `weights` if non-null) must hold `k` doubles;
 * `slots_out` must hold `k` writable doubles.
 */
enum SatcapStatus satcap_p2_solve(const double *demand,
                                  const double *gamma,
                                  const double *weights,
                                  uintptr_t k,
                                  double b_tot_hz,
                                  uintptr_t n_t,
                                  uintptr_t n_re_max,
                                  uint32_t order_n,
                                  enum SatcapCost cost,
                                  double *slots_out);

/**
 * End-to-end SINR (linear).
 *
 * # Safety
 * `p` must point to a valid budget; `out` must be writable.
 */
enum SatcapStatus satcap_link_total_sinr(const struct SatcapLinkBudget *p, double *out);

/**
 * Spectral-efficiency gap (bits/s/Hz) between backoffs `x1` and `x2` on the
 * same budget.
 *
 * # Safety
 * `p` must point to a valid budget; `out` must be writable.
 */
enum SatcapStatus satcap_link_gap(const struct SatcapLinkBudget *p,
                                  double x1,
                                  double x2,
                                  double *out);

/**
 * Interference-free upper bound of [`satcap_link_gap`].
 *
 * # Safety
 * `p` must point to a valid budget; `out` must be writable.
 */
enum SatcapStatus satcap_link_gap_bound(const struct SatcapLinkBudget *p,
                                        double x1,
                                        double x2,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SATCAP_H */
