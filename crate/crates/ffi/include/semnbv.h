#ifndef SEMNBV_H
#define SEMNBV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every fallible function.
 */
typedef enum SemnbvStatus {
  SEMNBV_STATUS_OK = 0,
  SEMNBV_STATUS_NULL_POINTER = 1,
  SEMNBV_STATUS_INVALID_UTF8 = 2,
  SEMNBV_STATUS_PARSE_ERROR = 3,
  SEMNBV_STATUS_INVALID_ARGUMENT = 4,
  SEMNBV_STATUS_IO = 5,
  SEMNBV_STATUS_RUN_FAILED = 6,
  SEMNBV_STATUS_PANIC = 7,
} SemnbvStatus;

/**
 * Why a mission ended.
 */
typedef enum SemnbvStopReason {
  SEMNBV_STOP_REASON_FINISHED = 0,
  SEMNBV_STOP_REASON_MAX_SIM_TIME = 1,
  SEMNBV_STOP_REASON_NO_PROGRESS = 2,
} SemnbvStopReason;

/**
 * Run configuration.
 */
typedef struct SemnbvConfig SemnbvConfig;

/**
 * Finished mission with its logs.
 */
typedef struct SemnbvRun SemnbvRun;

/**
 * Parsed scene.
 */
typedef struct SemnbvScene SemnbvScene;

/**
 * Headline numbers of a finished mission.
 */
typedef struct SemnbvRunSummary {
  bool finished;
  enum SemnbvStopReason stop_reason;
  double sim_time_s;
  size_t rounds;
  size_t acquisitions;
  size_t samples;
  /**
   * NaN when there are no samples.
   */
  double mean_directivity;
  double final_roi_ratio;
  double final_roi_progress;
} SemnbvRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *semnbv_last_error(void);

/**
 * Parses scene text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SemnbvStatus semnbv_scene_load(const char *text_in, struct SemnbvScene **out);

/**
 * # Safety
 * `scene` must come from [`semnbv_scene_load`] or be null.
 */
void semnbv_scene_free(struct SemnbvScene *scene);

/**
 * Number of targets in the scene's search order.
 *
 * # Safety
 * `scene` must be a live scene handle and `out` a valid pointer.
 */
enum SemnbvStatus semnbv_scene_target_count(const struct SemnbvScene *scene, size_t *out);

/**
 * Creates a configuration holding the defaults.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SemnbvStatus semnbv_config_new(struct SemnbvConfig **out);

/**
 * Parses `key = value` configuration text on top of the defaults.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SemnbvStatus semnbv_config_parse(const char *text_in, struct SemnbvConfig **out);

/**
 * Sets one key, using the same syntax as configuration files.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum SemnbvStatus semnbv_config_set(struct SemnbvConfig *config,
                                    const char *key,
                                    const char *value);

/**
 * # Safety
 * `config` must come from this library or be null.
 */
void semnbv_config_free(struct SemnbvConfig *config);

/**
 * Simulates one mission in memory.
 *
 * # Safety
 * `config` and `scene` must be live handles and `out` a valid pointer.
 */
enum SemnbvStatus semnbv_run(const struct SemnbvConfig *config,
                             const struct SemnbvScene *scene,
                             struct SemnbvRun **out);

/**
 * Fills `out` with the mission's headline numbers.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum SemnbvStatus semnbv_run_summary(const struct SemnbvRun *run, struct SemnbvRunSummary *out);

/**
 * Writes the run's header and CSV logs into directory `dir`.
 *
 * # Safety
 * `run` must be a live handle and `dir` a NUL-terminated path.
 */
enum SemnbvStatus semnbv_run_write(const struct SemnbvRun *run, const char *dir);

/**
 * # Safety
 * `run` must come from [`semnbv_run`] or be null.
 */
void semnbv_run_free(struct SemnbvRun *run);

/**
 * Cosine between the optical axis of a camera at `(x, y, z, yaw)` and the
 * line to the target.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SemnbvStatus semnbv_directivity(double x,
                                     double y,
                                     double z,
                                     double yaw,
                                     double tx,
                                     double ty,
                                     double tz,
                                     double *out);

/**
 * Refinement factor of a target voxel seen by `n_rays` rays whose
 * occupancy weight is `weight`.
 */
double semnbv_refine_factor(double n_rays, double weight, double n_exp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMNBV_H */
