#ifndef LPRED_H
#define LPRED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LpredStatus {
  LPRED_STATUS_OK = 0,
  /**
   * A finding about the data: no chain, not embeddable, broken link.
   */
  LPRED_STATUS_DOMAIN = 1,
  /**
   * Malformed input or out-of-range arguments.
   */
  LPRED_STATUS_INVALID = 2,
  LPRED_STATUS_NULL_POINTER = 3,
  LPRED_STATUS_PANIC = 4,
} LpredStatus;

/**
 * A map from metric points into ℓq^k.
 */
typedef struct LpredEmbedding LpredEmbedding;

/**
 * A finite metric space.
 */
typedef struct LpredMetric LpredMetric;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next `lpred_*` call on the same thread.
 */
const char *lpred_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lpred_version(void);

/**
 * Builds a metric from a row-major `n*n` matrix. Labels are `"0"`, `"1"`, ...
 */
enum LpredStatus lpred_metric_new(size_t n, const double *d, bool pseudo, struct LpredMetric **out);

/**
 * Parses the JSON metric format `{"labels": [...], "d": [[...]], "pseudo": bool}`.
 */
enum LpredStatus lpred_metric_from_json(const char *json, struct LpredMetric **out);

/**
 * Releases a metric. NULL is ignored.
 */
void lpred_metric_free(struct LpredMetric *m);

enum LpredStatus lpred_metric_len(const struct LpredMetric *m, size_t *out);

enum LpredStatus lpred_metric_dist(const struct LpredMetric *m, size_t i, size_t j, double *out);

/**
 * Writes whether the matrix is a valid (pseudo)metric with no defects.
 */
enum LpredStatus lpred_metric_is_clean(const struct LpredMetric *m, bool *out);

/**
 * New metric with every distance raised to `alpha` in (0, 1].
 */
enum LpredStatus lpred_metric_snowflake(const struct LpredMetric *m,
                                        double alpha,
                                        struct LpredMetric **out);

/**
 * Greedy `eps`-net in index order. `members` must hold `capacity`
 * entries; `count` receives the net size even when it exceeds `capacity`,
 * in which case the call fails with `LPRED_STATUS_INVALID`.
 */
enum LpredStatus lpred_greedy_net(const struct LpredMetric *m,
                                  double eps,
                                  size_t *members,
                                  size_t capacity,
                                  size_t *count);

/**
 * Minimal number of `eps`-steps from `u` to `v`; `LPRED_STATUS_DOMAIN`
 * when no chain exists.
 */
enum LpredStatus lpred_chain_steps(const struct LpredMetric *m,
                                   double eps,
                                   size_t u,
                                   size_t v,
                                   size_t *steps);

/**
 * Sampled chain number: the largest minimal chain length over pairs
 * closer than `c`. `LPRED_STATUS_DOMAIN` when some such pair has no chain.
 */
enum LpredStatus lpred_chain_number(const struct LpredMetric *m, double eps, double c, size_t *out);

/**
 * Builds an embedding of `n` points from a row-major `n*dim` coordinate
 * array, measured with the ℓq norm.
 */
enum LpredStatus lpred_embedding_new(double q,
                                     size_t n,
                                     size_t dim,
                                     const double *coords,
                                     struct LpredEmbedding **out);

/**
 * Releases an embedding. NULL is ignored.
 */
void lpred_embedding_free(struct LpredEmbedding *t);

enum LpredStatus lpred_embedding_dim(const struct LpredEmbedding *t, size_t *out);

enum LpredStatus lpred_embedding_distance(const struct LpredEmbedding *t,
                                          size_t i,
                                          size_t j,
                                          double *out);

/**
 * Least `A` with `A⁻¹ d^α <= |T u - T v|_q <= A d^α` on every pair.
 */
enum LpredStatus lpred_holder_distortion(const struct LpredMetric *m,
                                         const struct LpredEmbedding *t,
                                         double alpha,
                                         double *out);

/**
 * Exact isometric embedding into Euclidean space. `LPRED_STATUS_DOMAIN`
 * when none exists; `most_negative` (optional) then receives the witness
 * eigenvalue.
 */
enum LpredStatus lpred_embed_l2(const struct LpredMetric *m,
                                struct LpredEmbedding **out,
                                double *most_negative);

/**
 * Seeded search for a low-distortion embedding into ℓq^dim. `c <= 0`
 * means no scale split. `distortion` (optional) receives the certified `A`.
 */
enum LpredStatus lpred_embed_search(const struct LpredMetric *m,
                                    double alpha,
                                    double q,
                                    size_t dim,
                                    double c,
                                    size_t restarts,
                                    uint64_t seed,
                                    struct LpredEmbedding **out,
                                    double *distortion);

/**
 * `<n, m> = (n+m)(n+m+1)/2 + m`; `LPRED_STATUS_INVALID` on overflow.
 */
enum LpredStatus lpred_pair(uint64_t n, uint64_t m, uint64_t *out);

enum LpredStatus lpred_unpair(uint64_t k, uint64_t *n, uint64_t *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPRED_H */
