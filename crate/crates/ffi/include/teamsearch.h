#ifndef TEAMSEARCH_H
#define TEAMSEARCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_ARGUMENT = 2,
  TS_STATUS_CONFIG = 3,
  TS_STATUS_NUMERICAL = 4,
  TS_STATUS_UNSUPPORTED = 5,
  TS_STATUS_OUT_OF_RANGE = 6,
  TS_STATUS_PANIC = 7,
} TsStatus;

/**
 * Planner-optimal alliance chain with its expected payoffs.
 */
typedef struct TsChain TsChain;

/**
 * A validated scenario: cost functions and scope bounds.
 */
typedef struct TsScenario TsScenario;

/**
 * Equilibrium exit schedule with its expected payoffs.
 */
typedef struct TsSchedule TsSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *ts_status_string(enum TsStatus status);

/**
 * Message of the last failure on this thread; see [`write_str`] for the
 * buffer convention.
 */
enum TsStatus ts_last_error_message(char *buf, size_t len, size_t *needed);

/**
 * Parse and validate a TOML scenario.
 */
enum TsStatus ts_scenario_from_toml(const char *text, struct TsScenario **out);

/**
 * Team with costs `e^{bσ}/β_i` and scope bounds `[lo, hi]`.
 */
enum TsStatus ts_scenario_new_exponential(double b,
                                          const double *betas,
                                          size_t n_agents,
                                          double lo,
                                          double hi,
                                          struct TsScenario **out);

void ts_scenario_free(struct TsScenario *scenario);

enum TsStatus ts_scenario_agent_count(const struct TsScenario *scenario, size_t *out);

/**
 * Equilibrium exit schedule of the full team.
 */
enum TsStatus ts_equilibrium_schedule(const struct TsScenario *scenario, struct TsSchedule **out);

void ts_schedule_free(struct TsSchedule *schedule);

enum TsStatus ts_schedule_wave_count(const struct TsSchedule *schedule, size_t *out);

/**
 * Trigger drawdown of wave `wave` (zero-based).
 */
enum TsStatus ts_schedule_trigger(const struct TsSchedule *schedule, size_t wave, double *out);

/**
 * Zero-based wave in which `agent` (zero-based) exits.
 */
enum TsStatus ts_schedule_wave_of(const struct TsSchedule *schedule, size_t agent, size_t *out);

/**
 * Expected equilibrium payoff of `agent` from the initial state.
 */
enum TsStatus ts_schedule_payoff(const struct TsSchedule *schedule, size_t agent, double *out);

enum TsStatus ts_schedule_total_welfare(const struct TsSchedule *schedule, double *out);

/**
 * Partition label such as `{1,2}{3}`.
 */
enum TsStatus ts_schedule_label(const struct TsSchedule *schedule,
                                char *buf,
                                size_t len,
                                size_t *needed);

/**
 * Planner-optimal chain: greedy for proportional costs, exhaustive
 * search otherwise.
 */
enum TsStatus ts_planner_chain(const struct TsScenario *scenario, struct TsChain **out);

void ts_chain_free(struct TsChain *chain);

enum TsStatus ts_chain_len(const struct TsChain *chain, size_t *out);

enum TsStatus ts_chain_drawdown(const struct TsChain *chain, size_t stage, double *out);

enum TsStatus ts_chain_stage_of(const struct TsChain *chain, size_t agent, size_t *out);

enum TsStatus ts_chain_payoff(const struct TsChain *chain, size_t agent, double *out);

enum TsStatus ts_chain_total_welfare(const struct TsChain *chain, double *out);

enum TsStatus ts_chain_label(const struct TsChain *chain, char *buf, size_t len, size_t *needed);

/**
 * Expected gain of the maximum and expected duration of one drawdown phase.
 */
enum TsStatus ts_phase_stats(double start_gap,
                             double stop_gap,
                             double total_scope,
                             double *gain,
                             double *duration);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEAMSEARCH_H */
