#ifndef ROLE_ENGINE_H
#define ROLE_ENGINE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RoleEngineStatus {
  ROLE_ENGINE_STATUS_OK = 0,
  ROLE_ENGINE_STATUS_NULL_POINTER = 1,
  ROLE_ENGINE_STATUS_INVALID_INPUT = 2,
  ROLE_ENGINE_STATUS_PARSE = 3,
  ROLE_ENGINE_STATUS_INFEASIBLE = 4,
  ROLE_ENGINE_STATUS_SOLVER = 5,
  ROLE_ENGINE_STATUS_IO = 6,
  ROLE_ENGINE_STATUS_PANIC = 7,
} RoleEngineStatus;

/**
 * Occupancy grid handle.
 */
typedef struct RoleEngineGrid RoleEngineGrid;

/**
 * Finished run handle.
 */
typedef struct RoleEngineRun RoleEngineRun;

/**
 * Parsed scenario handle.
 */
typedef struct RoleEngineScenario RoleEngineScenario;

/**
 * Signed distance field handle.
 */
typedef struct RoleEngineSdf RoleEngineSdf;

/**
 * Summary numbers of a finished run.
 */
typedef struct RoleEngineMetrics {
  double min_distance;
  double avg_jerk;
  size_t collision_frames;
  size_t replans;
  size_t steps_executed;
  /**
   * Non-zero when the run stopped before every agent finished.
   */
  uint8_t aborted;
} RoleEngineMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *role_engine_last_error(void);

/**
 * Empty grid of `width` x `height` cells of side `resolution` meters.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum RoleEngineStatus role_engine_grid_new(size_t width,
                                           size_t height,
                                           double resolution,
                                           struct RoleEngineGrid **out);

/**
 * One of the built-in maps (`boxes`, `gaps`, `rooms`, `corridors`,
 * `pillars`, `hallway`).
 *
 * # Safety
 * `name` must be null or a nul-terminated string; `out` as in
 * [`role_engine_grid_new`].
 */
enum RoleEngineStatus role_engine_grid_bundled(const char *name, struct RoleEngineGrid **out);

/**
 * Marks cell `(col, row)` occupied or free. Row 0 is the top row.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
enum RoleEngineStatus role_engine_grid_set(struct RoleEngineGrid *grid,
                                           size_t col,
                                           size_t row,
                                           bool occupied);

/**
 * Writes whether `(col, row)` is occupied; out-of-range cells count as
 * occupied.
 *
 * # Safety
 * `grid` must be null or a live grid handle; `out` null or writable.
 */
enum RoleEngineStatus role_engine_grid_is_occupied(const struct RoleEngineGrid *grid,
                                                   size_t col,
                                                   size_t row,
                                                   bool *out);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void role_engine_grid_free(struct RoleEngineGrid *grid);

/**
 * Exact signed distance field of `grid` (meters, negative inside).
 *
 * # Safety
 * `grid` must be null or a live grid handle; `out` as in
 * [`role_engine_grid_new`].
 */
enum RoleEngineStatus role_engine_sdf_compute(const struct RoleEngineGrid *grid,
                                              struct RoleEngineSdf **out);

/**
 * Bilinearly interpolated distance at `(x, y)` meters.
 *
 * # Safety
 * `sdf` must be null or a live handle; `out` null or writable.
 */
enum RoleEngineStatus role_engine_sdf_value(const struct RoleEngineSdf *sdf,
                                            double x,
                                            double y,
                                            double *out);

/**
 * # Safety
 * `sdf` must be null or a handle not yet freed.
 */
void role_engine_sdf_free(struct RoleEngineSdf *sdf);

/**
 * Minimum-cost assignment of `m` agents to `n` roles over the row-major
 * `m * n` cost matrix (`INFINITY` marks forbidden pairs). Writes the role
 * index of every agent to `role_of_agent` (`-1` when idle) and the summed
 * cost to `total`.
 *
 * # Safety
 * `costs` must point to `m * n` doubles, `role_of_agent` to `m` writable
 * `intptr_t`s and `total` to one writable double.
 */
enum RoleEngineStatus role_engine_assign(const double *costs,
                                         size_t m,
                                         size_t n,
                                         ptrdiff_t *role_of_agent,
                                         double *total);

/**
 * Parses a TOML scenario. Relative map paths resolve against `base_dir`
 * (null means the working directory).
 *
 * # Safety
 * `toml` and `base_dir` must be null or nul-terminated strings; `out` as
 * in [`role_engine_grid_new`].
 */
enum RoleEngineStatus role_engine_scenario_parse(const char *toml,
                                                 const char *base_dir,
                                                 struct RoleEngineScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void role_engine_scenario_free(struct RoleEngineScenario *scenario);

/**
 * Runs negotiation, assignment, role-playing and monitoring. An infeasible
 * scenario still yields a run (with `aborted` set and no steps).
 *
 * # Safety
 * `scenario` must be null or a live handle; `out` as in
 * [`role_engine_grid_new`].
 */
enum RoleEngineStatus role_engine_run(const struct RoleEngineScenario *scenario,
                                      struct RoleEngineRun **out);

/**
 * Summary metrics of a run. Distance and jerk are NaN when no agent moved.
 *
 * # Safety
 * `run` must be null or a live handle; `out` null or writable.
 */
enum RoleEngineStatus role_engine_run_metrics(const struct RoleEngineRun *run,
                                              struct RoleEngineMetrics *out);

/**
 * Full run report as a JSON string owned by the caller; release it with
 * [`role_engine_string_free`].
 *
 * # Safety
 * `run` must be null or a live handle; `out` null or writable.
 */
enum RoleEngineStatus role_engine_run_report_json(const struct RoleEngineRun *run, char **out);

/**
 * Executed trace as CSV (`step,agent_id,x,y,vx,vy,published_version`),
 * owned by the caller. Writes null when the run never started.
 *
 * # Safety
 * `run` must be null or a live handle; `out` null or writable.
 */
enum RoleEngineStatus role_engine_run_trace_csv(const struct RoleEngineRun *run, char **out);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void role_engine_run_free(struct RoleEngineRun *run);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void role_engine_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROLE_ENGINE_H */
