/* SPDX-License-Identifier: Apache-2.0 */

#ifndef VFPRUNE_H
#define VFPRUNE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define VF_MODE_FUSION 0

#define VF_MODE_LIGHT 1

#define VF_MODE_CFL_LIGHT 2

#define VF_MODE_DIFF 3

#define VF_REACH_BFS 0

#define VF_REACH_CFL 1

typedef enum VfStatus {
  VF_STATUS_OK = 0,
  VF_STATUS_NULL_ARG = 1,
  VF_STATUS_INVALID_UTF8 = 2,
  VF_STATUS_PARSE = 3,
  VF_STATUS_ANALYSIS = 4,
  VF_STATUS_PANIC = 5,
  VF_STATUS_INVALID_ARG = 6,
} VfStatus;

/**
 * A parsed program.
 */
typedef struct VfProgram VfProgram;

/**
 * The result of one `vf_analyze` call.
 */
typedef struct VfReport VfReport;

/**
 * Analysis options. Start from `vf_options_default`.
 */
typedef struct VfOptions {
  size_t max_path_len;
  size_t max_summaries;
  size_t guard_depth;
  size_t scc_iters;
  /**
   * `VF_REACH_*`; ignored by `VF_MODE_CFL_LIGHT`.
   */
  uint32_t reach;
  /**
   * Zero all timing fields so reports are reproducible.
   */
  bool no_timing;
  /**
   * Comma-separated globs. Both set selects the label checker, both
   * null selects null-dereference checking.
   */
  const char *sources;
  const char *sinks;
} VfOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct VfOptions vf_options_default(void);

/**
 * Parses NUL-terminated program text. On success `*out` owns a new program.
 *
 * # Safety
 * `src` must be null or a valid C string; `out` must be null or writable.
 */
enum VfStatus vf_program_parse(const char *src, struct VfProgram **out);

/**
 * # Safety
 * `prog` must be null or come from `vf_program_parse`, and not be freed twice.
 */
void vf_program_free(struct VfProgram *prog);

/**
 * Analyzes `prog` in one of the `VF_MODE_*` modes. `opts` may be null for
 * defaults. On success `*out` owns a new report.
 *
 * # Safety
 * `prog` must be a live program handle, `opts` null or valid, `out` writable.
 */
enum VfStatus vf_analyze(const struct VfProgram *prog,
                         uint32_t mode,
                         const struct VfOptions *opts,
                         struct VfReport **out);

/**
 * The report as JSON. Owned by the report; valid until it is freed.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
const char *vf_report_json(const struct VfReport *report);

/**
 * Bugs found by the first run in the report.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
size_t vf_report_bug_count(const struct VfReport *report);

/**
 * True when some run hit a cap.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
bool vf_report_soundness_flag(const struct VfReport *report);

/**
 * True when a diff run found different bugs in the two modes.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
bool vf_report_bugs_mismatch(const struct VfReport *report);

/**
 * # Safety
 * `report` must be null or come from `vf_analyze`, and not be freed twice.
 */
void vf_report_free(struct VfReport *report);

/**
 * Message for the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *vf_last_error(void);

const char *vf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VFPRUNE_H */
