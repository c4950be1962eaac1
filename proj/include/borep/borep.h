/* Copyright 2026 The borep Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the borep stochastic bilevel solver library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a borep_status; on
 * failure borep_last_error() describes the problem until the next call on
 * the same thread. Strings returned through char** are heap allocated and
 * released with borep_string_free. Structured inputs and outputs are JSON
 * text, and every JSON document produced carries "schema": 1.
 */
#ifndef BOREP_BOREP_H_
#define BOREP_BOREP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(BOREP_BUILDING_LIBRARY)
#define BOREP_API __attribute__((visibility("default")))
#else
#define BOREP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum borep_status {
  BOREP_OK = 0,
  BOREP_INVALID = 1,     /* malformed input or failed validation */
  BOREP_RUNTIME = 2,     /* I/O failure or numerical breakdown */
  BOREP_UNSUPPORTED = 3  /* operation needs a capability the problem lacks */
} borep_status;

typedef struct borep_problem borep_problem;
typedef struct borep_trace borep_trace;

BOREP_API const char* borep_version(void);
BOREP_API const char* borep_last_error(void);
BOREP_API void borep_string_free(char* s);

/* Problem description: {"kind": "quadratic" | "quartic" | "hyperclean" |
 * "hyperopt", "dims": [dx, dy], "noise": .., "seed": .., ...}. */
BOREP_API borep_status borep_problem_from_json(const char* json, borep_problem** out);
BOREP_API void borep_problem_free(borep_problem* p);
BOREP_API borep_status borep_problem_info_json(const borep_problem* p, char** out);

/* `algo` is "borep", "soba", "ma-soba" or NULL to use the config's own.
 * `config` is a JSON object or "theory:eps=..,delta=..[,V0=..,Delta=..,K=..]". */
BOREP_API borep_status borep_run(const borep_problem* p, const char* algo, const char* config,
                                 uint64_t seed, borep_trace** out);
BOREP_API void borep_trace_free(borep_trace* t);
BOREP_API size_t borep_trace_size(const borep_trace* t);
/* Writes the CSV to `path` and the run header to `path`.json. */
BOREP_API borep_status borep_trace_write_csv(const borep_trace* t, const char* path);
BOREP_API borep_status borep_trace_csv(const borep_trace* t, char** out);
BOREP_API borep_status borep_trace_summary_json(const borep_trace* t, char** out);

/* Diagnostics. Each takes a JSON request object (NULL means {}) and returns
 * a JSON report.
 *   schedule:     {"eps", "delta", "V0"?, "Delta"?, "K"?}
 *   check_grad:   {"n_points"?, "tol"?, "h"?, "seed"?, "radius"?}
 *   smoothness:   {"config", "algo"?, "seed"?, "points"?}
 *   verify_lemma: {"lemma", "eps", "delta", "n_seeds"?, "seed"?, "V0"?,
 *                  "Delta"?, "K"?, "threads"?, "mc_samples"?, "y_offset"?,
 *                  "z_offset"?}
 * check_grad and verify_lemma report a failed check through "pass": false
 * with BOREP_OK; the status only reflects whether the check could run. */
BOREP_API borep_status borep_schedule_json(const borep_problem* p, const char* request,
                                           char** out);
BOREP_API borep_status borep_check_grad_json(const borep_problem* p, const char* request,
                                             char** out);
BOREP_API borep_status borep_smoothness_json(const borep_problem* p, const char* request,
                                             char** out);
BOREP_API borep_status borep_verify_lemma_json(const borep_problem* p, const char* request,
                                               char** out);

/* Runs seeds seed_lo..seed_hi inclusive, writing one CSV per seed plus
 * summary.json into out_dir. threads == 0 uses BOREP_THREADS or the
 * hardware concurrency. */
BOREP_API borep_status borep_sweep(const borep_problem* p, const char* algo, const char* config,
                                   uint64_t seed_lo, uint64_t seed_hi, const char* out_dir,
                                   unsigned threads, char** summary);

#ifdef __cplusplus
}
#endif

#endif /* BOREP_BOREP_H_ */
