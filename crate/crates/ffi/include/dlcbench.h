#ifndef DLCBENCH_H
#define DLCBENCH_H

/* Generated by cbindgen from dlcbench-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible entry point.
typedef enum DlcStatus {
  DLC_STATUS_OK = 0,
  // A required pointer argument was null.
  DLC_STATUS_NULL_POINTER = 1,
  // An argument was out of range or inconsistent.
  DLC_STATUS_INVALID_ARGUMENT = 2,
  // File system or serialization failure.
  DLC_STATUS_IO_ERROR = 3,
  // The operation itself failed; see the error message.
  DLC_STATUS_RUNTIME_ERROR = 4,
  // An internal invariant broke. State is unspecified afterwards.
  DLC_STATUS_PANIC = 5,
} DlcStatus;

// Objective function codes for `uint32_t` arguments.
typedef enum DlcObjective {
  DLC_OBJECTIVE_SPHERE = 0,
  DLC_OBJECTIVE_RASTRIGIN = 1,
  DLC_OBJECTIVE_ACKLEY = 2,
  DLC_OBJECTIVE_ROSENBROCK = 3,
} DlcObjective;

// Constraint handling strategy codes for `uint32_t` arguments.
typedef enum DlcHandler {
  DLC_HANDLER_FEASIBILITY = 0,
  DLC_HANDLER_PENALTY = 1,
  DLC_HANDLER_EPSILON = 2,
} DlcHandler;

// Change mode codes for `uint32_t` arguments.
typedef enum DlcMode {
  DLC_MODE_TRANSLATE = 0,
  DLC_MODE_TRANSLATE_ROTATE = 1,
  DLC_MODE_MULTI_TRANSLATE = 2,
} DlcMode;

// Severity preset codes for `uint32_t` arguments.
typedef enum DlcSeverity {
  DLC_SEVERITY_SMALL = 0,
  DLC_SEVERITY_MEDIUM = 1,
  DLC_SEVERITY_LARGE = 2,
} DlcSeverity;

// Opaque handle to a constraint schedule.
typedef struct DlcSchedule DlcSchedule;

// Opaque handle to a per-frame reference objective table.
typedef struct DlcTable DlcTable;

// Opaque handle to one optimization run's per-generation trace.
typedef struct DlcTrace DlcTrace;

// Schedule generation parameters. Obtain defaults from
// `dlc_schedule_params_default`, then override fields as needed.
typedef struct DlcScheduleParams {
  size_t dimension;
  double lower;
  double upper;
  // Trial evaluations between consecutive changes.
  uint64_t tau;
  // Trial evaluations before the first change.
  uint64_t buffer;
  // Number of changes after the initial frame.
  uint32_t changes;
  // One of the `DlcMode` values.
  uint32_t mode;
  // One of the `DlcSeverity` values.
  uint32_t severity;
  // Constraints per frame; only multi-translate uses values above 1.
  size_t m;
  // Rotation probability per change (translate+rotate only).
  double p_rot;
  // Coefficient pair swaps per rotation.
  size_t swaps;
  uint64_t seed;
} DlcScheduleParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on the calling thread. The pointer
// stays valid until the next failing call on the same thread; never free
// it. Returns an empty string when nothing failed yet.
const char *dlc_last_error_message(void);

// Release a string returned through a `char**` out parameter. Null is a
// no-op.
void dlc_string_free(char *s);

// Fill `out` with the default generation parameters: dimension 30 on
// [-5, 5], tau 1000, buffer 1000, 100 changes, translate mode, medium
// severity, one constraint, seed 0.
enum DlcStatus dlc_schedule_params_default(struct DlcScheduleParams *out);

// Generate a schedule from `params` into a new handle.
enum DlcStatus dlc_schedule_generate(const struct DlcScheduleParams *params,
                                     struct DlcSchedule **out);

// Parse a schedule from its JSON text into a new handle.
enum DlcStatus dlc_schedule_from_json(const char *json, struct DlcSchedule **out);

// Serialize a schedule to JSON. The returned string is released with
// `dlc_string_free`.
enum DlcStatus dlc_schedule_to_json(const struct DlcSchedule *schedule, char **out);

// Load a schedule from a JSON file into a new handle.
enum DlcStatus dlc_schedule_load(const char *path, struct DlcSchedule **out);

// Write a schedule to a JSON file.
enum DlcStatus dlc_schedule_save(const struct DlcSchedule *schedule, const char *path);

// Release a schedule handle. Null is a no-op.
void dlc_schedule_free(struct DlcSchedule *schedule);

// Number of frames (initial frame plus one per change).
enum DlcStatus dlc_schedule_frame_count(const struct DlcSchedule *schedule, size_t *out);

// Decision space dimension.
enum DlcStatus dlc_schedule_dimension(const struct DlcSchedule *schedule, size_t *out);

// Total trial evaluation budget of the schedule's clock.
enum DlcStatus dlc_schedule_budget(const struct DlcSchedule *schedule, uint64_t *out);

// Evaluate one objective at `x`.
enum DlcStatus dlc_objective_eval(uint32_t objective, const double *x, size_t len, double *out);

// Summed constraint violation of `x` under the frame at time `t`; zero
// exactly when `x` is feasible.
enum DlcStatus dlc_schedule_violation(const struct DlcSchedule *schedule,
                                      size_t t,
                                      const double *x,
                                      size_t len,
                                      double *out);

// Monte Carlo estimate of the feasible fraction of the box under the frame
// at time `t`.
enum DlcStatus dlc_schedule_region_ratio(const struct DlcSchedule *schedule,
                                         size_t t,
                                         uint64_t samples,
                                         uint64_t seed,
                                         double *out);

// Closed-form sphere optimum under the frame at time `t`. Only frames with
// exactly one constraint are supported. `out_feasible` is false when the
// frame admits no feasible point; `out_value` then belongs to the
// least-violating corner.
enum DlcStatus dlc_schedule_sphere_optimum(const struct DlcSchedule *schedule,
                                           size_t t,
                                           double *out_value,
                                           bool *out_feasible);

// Optimize `schedule` with the default engine settings and the chosen
// objective and handler. The trace handle is released with
// `dlc_trace_free`.
enum DlcStatus dlc_run(const struct DlcSchedule *schedule,
                       uint32_t objective,
                       uint32_t handler,
                       uint64_t seed,
                       struct DlcTrace **out);

// Release a trace handle. Null is a no-op.
void dlc_trace_free(struct DlcTrace *trace);

// Number of per-generation records in the trace.
enum DlcStatus dlc_trace_record_count(const struct DlcTrace *trace, size_t *out);

// Number of final-best entries, one per time index the run observed.
enum DlcStatus dlc_trace_final_best_count(const struct DlcTrace *trace, size_t *out);

// Final best of entry `index`: its time index, objective and violation.
enum DlcStatus dlc_trace_final_best(const struct DlcTrace *trace,
                                    size_t index,
                                    size_t *out_t,
                                    double *out_f,
                                    double *out_phi);

// Write the trace as a CSV file, one row per generation.
enum DlcStatus dlc_trace_write_csv(const struct DlcTrace *trace, const char *path);

// Per-frame reference objectives found by an independent static search
// with `evals` evaluations per frame. The handle is released with
// `dlc_table_free`.
enum DlcStatus dlc_best_known_search(const struct DlcSchedule *schedule,
                                     uint32_t objective,
                                     uint64_t evals,
                                     uint64_t seed,
                                     struct DlcTable **out);

// Closed-form per-frame sphere optima. Only single-constraint schedules
// are supported.
enum DlcStatus dlc_best_known_analytic(const struct DlcSchedule *schedule, struct DlcTable **out);

// Release a table handle. Null is a no-op.
void dlc_table_free(struct DlcTable *table);

// Load a reference table from a JSON file into a new handle.
enum DlcStatus dlc_table_load(const char *path, struct DlcTable **out);

// Write a reference table to a JSON file.
enum DlcStatus dlc_table_save(const struct DlcTable *table, const char *path);

// Number of entries in the table.
enum DlcStatus dlc_table_entry_count(const struct DlcTable *table, size_t *out);

// Reference objective at time `t`. `out_feasible` is false when the frame
// admits no feasible point in the box.
enum DlcStatus dlc_table_get(const struct DlcTable *table,
                             size_t t,
                             double *out_objective,
                             bool *out_feasible);

// Mean absolute gap between the per-generation error terms of `trace` and
// the reference objectives in `table`.
enum DlcStatus dlc_modified_offline_error(const struct DlcTrace *trace,
                                          const struct DlcTable *table,
                                          double *out);

// Tie-corrected Kruskal-Wallis test over `groups` groups. `values` holds
// all observations back to back; `group_sizes[i]` is the length of group
// `i`, so `values` must hold the sum of all sizes.
enum DlcStatus dlc_kruskal_wallis(const double *values,
                                  const size_t *group_sizes,
                                  size_t groups,
                                  double *out_h,
                                  double *out_p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DLCBENCH_H */
