#ifndef CLOSEDLOOP_H
#define CLOSEDLOOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum ClStatus {
  CL_STATUS_OK = 0,
  CL_STATUS_NULL_POINTER = 1,
  CL_STATUS_INVALID_ARGUMENT = 2,
  CL_STATUS_PARSE_ERROR = 3,
  /*
   An enumeration or tree would exceed the built-in size caps.
   */
  CL_STATUS_TOO_LARGE = 4,
  CL_STATUS_BOUND_VIOLATED = 5,
  /*
   The output buffer is too short; the required length was written.
   */
  CL_STATUS_BUFFER_TOO_SMALL = 6,
  /*
   A Rust panic was caught at the boundary.
   */
  CL_STATUS_PANIC = 7,
} ClStatus;

/*
 A discrete memoryless channel.
 */
typedef struct ClDmc ClDmc;

/*
 A state-dependent channel `W(y | x, s)`.
 */
typedef struct ClSdmc ClSdmc;

/*
 A depth-`n` strategy tree.
 */
typedef struct ClTree ClTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next failing call on the same thread.
 */
const char *cl_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *cl_version(void);

/*
 Channel from a row-major `inputs x outputs` matrix of `P(y|x)`.

 # Safety
 `rows` must point to `inputs * outputs` doubles; `out` must be writable.
 */
enum ClStatus cl_dmc_new(const double *rows, size_t inputs, size_t outputs, struct ClDmc **out);

/*
 Binary symmetric channel with crossover `p`.

 # Safety
 `out` must be writable.
 */
enum ClStatus cl_dmc_bsc(double p, struct ClDmc **out);

/*
 Channel from the `dmc |X| |Y|` text format.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ClStatus cl_dmc_parse(const char *text, struct ClDmc **out);

/*
 # Safety
 `dmc` must come from a `cl_dmc_*` constructor and not be freed twice.
 */
void cl_dmc_free(struct ClDmc *dmc);

/*
 State-dependent channel from `inputs * states` rows of `outputs`
 probabilities; row `x * states + s` is `W(. | x, s)`.

 # Safety
 `rows` must point to `inputs * states * outputs` doubles; `out` must be
 writable.
 */
enum ClStatus cl_sdmc_new(const double *rows,
                          size_t inputs,
                          size_t states,
                          size_t outputs,
                          struct ClSdmc **out);

/*
 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ClStatus cl_sdmc_parse(const char *text, struct ClSdmc **out);

/*
 # Safety
 `sdmc` must come from a `cl_sdmc_*` constructor and not be freed twice.
 */
void cl_sdmc_free(struct ClSdmc *sdmc);

/*
 The threshold strategy of depth `n` for the score of `(a, b)` on `dmc`.

 # Safety
 `dmc` must be a live handle; `out` must be writable.
 */
enum ClStatus cl_tree_optimal(const struct ClDmc *dmc,
                              size_t n,
                              size_t a,
                              size_t b,
                              double mu,
                              struct ClTree **out);

/*
 Tree from breadth-first labels.

 # Safety
 `labels` must point to `len` values; `out` must be writable.
 */
enum ClStatus cl_tree_from_labels(size_t n,
                                  size_t inputs,
                                  size_t outputs,
                                  const size_t *labels,
                                  size_t len,
                                  struct ClTree **out);

/*
 Tree from the `tree n |X| |Y|` text format.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ClStatus cl_tree_parse(const char *text, struct ClTree **out);

/*
 # Safety
 `tree` must come from a `cl_tree_*` constructor and not be freed twice.
 */
void cl_tree_free(struct ClTree *tree);

/*
 Copies the breadth-first labels into `buf`. `written` receives the
 number of labels; when `cap` is too small nothing is copied and
 `BufferTooSmall` is returned.

 # Safety
 `tree` must be a live handle, `buf` must have room for `cap` values and
 `written` must be writable.
 */
enum ClStatus cl_tree_labels(const struct ClTree *tree, size_t *buf, size_t cap, size_t *written);

/*
 `P(|S_n| > n mu)` under `tree`.

 # Safety
 Handles must be live; `out` must be writable.
 */
enum ClStatus cl_tree_success_probability(const struct ClTree *tree,
                                          const struct ClDmc *dmc,
                                          size_t a,
                                          size_t b,
                                          double mu,
                                          double *out);

/*
 Largest success probability over every depth-`n` strategy.

 # Safety
 `dmc` must be live; `out` must be writable.
 */
enum ClStatus cl_exhaustive_max_success(const struct ClDmc *dmc,
                                        size_t n,
                                        size_t a,
                                        size_t b,
                                        double mu,
                                        double *out);

/*
 `1 / (4 n mu^2)`.

 # Safety
 `out` must be writable.
 */
enum ClStatus cl_lemma1_bound(size_t n, double mu, double *out);

/*
 Largest absolute conditional drift of the score under `tree`.

 # Safety
 Handles must be live; `out` must be writable.
 */
enum ClStatus cl_martingale_bias(const struct ClTree *tree,
                                 const struct ClDmc *dmc,
                                 size_t a,
                                 size_t b,
                                 double mu,
                                 double *out);

/*
 `I(X;Y)` in bits for input law `px` and state law `ps`.

 # Safety
 `px` and `ps` must point to `px_len` and `ps_len` doubles; `sdmc` must be
 live; `out` must be writable.
 */
enum ClStatus cl_mutual_information(const double *px,
                                    size_t px_len,
                                    const struct ClSdmc *sdmc,
                                    const double *ps,
                                    size_t ps_len,
                                    double *out);

/*
 Expected per-letter distortion of the optimal estimator. `dist` is the
 row-major `estimates x states` table `d(e, s)`.

 # Safety
 Pointers must reference arrays of the stated lengths; `sdmc` must be
 live; `out` must be writable.
 */
enum ClStatus cl_expected_distortion(const double *px,
                                     size_t px_len,
                                     const struct ClSdmc *sdmc,
                                     const double *ps,
                                     size_t ps_len,
                                     const double *dist,
                                     size_t estimates,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLOSEDLOOP_H */
