#ifndef REUSEKNN_H
#define REUSEKNN_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RkStatus {
  RK_STATUS_OK = 0,
  RK_STATUS_NULL_POINTER = 1,
  RK_STATUS_INVALID_ARGUMENT = 2,
  RK_STATUS_UTF8 = 3,
  RK_STATUS_IO = 4,
  RK_STATUS_PARSE = 5,
  RK_STATUS_CONFIG = 6,
  RK_STATUS_EMPTY_TABLE = 7,
  RK_STATUS_DEGENERATE_USAGE = 8,
  RK_STATUS_UNDEFINED = 9,
  RK_STATUS_MISMATCH = 10,
  RK_STATUS_PANIC = 11,
  RK_STATUS_OTHER = 12,
} RkStatus;

typedef enum RkTail {
  RK_TAIL_TWO_SIDED = 0,
  RK_TAIL_LESS = 1,
  RK_TAIL_GREATER = 2,
} RkTail;

/**
 * Opaque stateful recommender: one strategy, one neighbor count, one ledger.
 */
typedef struct RkRecommender RkRecommender;

/**
 * Opaque rating table.
 */
typedef struct RkTable RkTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if the last call
 * succeeded. Valid until the next `rk_*` call on the same thread.
 */
const char *rk_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rk_string_free(char *s);

/**
 * Loads a rating file. `format` is "csv", "tsv" or "dat"; `scale` is a
 * scale spec such as "1..5" or "0.5..5:0.5". A null `format` means csv.
 *
 * # Safety
 * String arguments must be valid nul-terminated strings; `out` must be
 * writable.
 */
enum RkStatus rk_table_load(const char *path,
                            const char *format,
                            const char *scale,
                            struct RkTable **out_table);

/**
 * Generates a synthetic table on the 1..5 integer scale. Exponents of zero
 * select uniform item popularity or user activity.
 *
 * # Safety
 * `out_table` must be writable.
 */
enum RkStatus rk_table_synth(size_t users,
                             size_t items,
                             double density,
                             double popularity_exponent,
                             double activity_exponent,
                             uint64_t seed,
                             struct RkTable **out_table);

/**
 * # Safety
 * `table` must come from this library and not have been freed. Null is
 * ignored.
 */
void rk_table_free(struct RkTable *table);

/**
 * Number of users in the table's id space; 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t rk_table_num_users(const struct RkTable *table);

/**
 * # Safety
 * `table` must be null or a live handle.
 */
size_t rk_table_num_items(const struct RkTable *table);

/**
 * # Safety
 * `table` must be null or a live handle.
 */
size_t rk_table_num_ratings(const struct RkTable *table);

/**
 * Descriptive statistics as a JSON object.
 *
 * # Safety
 * `table` must be a live handle; `out_json` must be writable.
 */
enum RkStatus rk_table_describe(const struct RkTable *table, char **out_json);

/**
 * Privacy parameter of a vulnerable user in nats, from its data usage and
 * privacy risk (`0 <= risk < usage`).
 *
 * # Safety
 * `out_epsilon` must be writable.
 */
enum RkStatus rk_epsilon(double data_usage, double privacy_risk, double *out_epsilon);

/**
 * Data-usage threshold estimated from per-user usage counts.
 *
 * # Safety
 * `usages` must point to `len` readable values; `out_tau` must be writable.
 */
enum RkStatus rk_estimate_tau(const uint64_t *usages, size_t len, double *out_tau);

/**
 * Mann-Whitney U test of sample `a` against sample `b`. `Less` tests whether
 * `a` tends to be smaller.
 *
 * # Safety
 * `a` and `b` must point to `na` and `nb` readable values; the out-pointers
 * must be writable.
 */
enum RkStatus rk_mann_whitney(const double *a,
                              size_t na,
                              const double *b,
                              size_t nb,
                              enum RkTail tail,
                              double *out_u,
                              double *out_p);

/**
 * Runs an experiment config file, writes its outputs, and returns the run
 * manifest as JSON. Relative paths in the config resolve against the config
 * file's directory.
 *
 * # Safety
 * `config_path` must be a valid string; `out_manifest_json` must be
 * writable.
 */
enum RkStatus rk_run_config(const char *config_path, char **out_manifest_json);

/**
 * Creates a recommender over a table using cosine similarity. `method` is a
 * method name such as "UserKNN", "Gain_DP" or "UserKNN_full_DP"; `tau` is
 * the data-usage threshold (pass infinity for none). Embedding-based
 * strategies are not available here.
 *
 * # Safety
 * `table` must be a live handle; `method` a valid string; `out_rec`
 * writable. The recommender keeps its own reference to the table's data.
 */
enum RkStatus rk_recommender_new(const struct RkTable *table,
                                 const char *method,
                                 size_t k,
                                 double tau,
                                 uint64_t seed,
                                 struct RkRecommender **out_rec);

/**
 * # Safety
 * `rec` must come from this library and not have been freed. Null is
 * ignored.
 */
void rk_recommender_free(struct RkRecommender *rec);

/**
 * Estimates `user`'s rating of `item` (external ids), charging the served
 * neighbors to the ledger. `out_neighbors` may be null.
 *
 * # Safety
 * `rec` must be a live handle; the strings valid; `out_score` writable.
 */
enum RkStatus rk_recommender_query(struct RkRecommender *rec,
                                   const char *user,
                                   const char *item,
                                   double *out_score,
                                   size_t *out_neighbors);

/**
 * Number of times `user`'s ratings have been served so far.
 *
 * # Safety
 * `rec` must be a live handle; `user` valid; `out_usage` writable.
 */
enum RkStatus rk_recommender_data_usage(const struct RkRecommender *rec,
                                        const char *user,
                                        uint64_t *out_usage);

/**
 * Privacy parameter of `user` under the recommender's ledger. Infinity
 * means no DP protection applied.
 *
 * # Safety
 * `rec` must be a live handle; `user` valid; `out_epsilon` writable.
 */
enum RkStatus rk_recommender_epsilon(const struct RkRecommender *rec,
                                     const char *user,
                                     double *out_epsilon);

/**
 * Total servings charged to the recommender's ledger.
 *
 * # Safety
 * `rec` must be null or a live handle.
 */
uint64_t rk_recommender_total_servings(const struct RkRecommender *rec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REUSEKNN_H */
