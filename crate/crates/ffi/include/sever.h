#ifndef SEVER_H
#define SEVER_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeverStatus {
  SEVER_STATUS_OK = 0,
  SEVER_STATUS_NULL_POINTER = 1,
  SEVER_STATUS_INVALID_ARGUMENT = 2,
  SEVER_STATUS_DIMENSION_MISMATCH = 3,
  SEVER_STATUS_SINGULAR = 4,
  SEVER_STATUS_DIVERGED = 5,
  SEVER_STATUS_FILTERED_EVERYTHING = 6,
  SEVER_STATUS_IO = 7,
  SEVER_STATUS_PARSE = 8,
  SEVER_STATUS_INTERNAL = 99,
} SeverStatus;

typedef enum SeverLoss {
  SEVER_LOSS_SQUARED = 0,
  SEVER_LOSS_HINGE = 1,
  SEVER_LOSS_LOGISTIC = 2,
} SeverLoss;

typedef enum SeverMode {
  /**
   * Remove the top `p_fraction` for `num_rounds` rounds.
   */
  SEVER_MODE_PRACTICAL = 0,
  /**
   * Randomized filter until the mean score drops below `threshold_mult·σ²`.
   */
  SEVER_MODE_THEORETICAL = 1,
} SeverMode;

typedef struct SeverDataset SeverDataset;

typedef struct SeverOutcome SeverOutcome;

/**
 * Run settings. Start from [`sever_config_default`].
 */
typedef struct SeverRunConfig {
  enum SeverLoss loss;
  double lambda;
  enum SeverMode mode;
  double p_fraction;
  size_t num_rounds;
  double sigma;
  double threshold_mult;
  bool per_class;
  uint64_t seed;
  /**
   * Subgradient learner only (hinge, logistic).
   */
  size_t max_epochs;
  double step_size;
} SeverRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sever_last_error_message(void);

/**
 * Copies `n × d` features and `n` labels into a new dataset.
 */
enum SeverStatus sever_dataset_new(const double *x,
                                   const double *y,
                                   size_t n,
                                   size_t d,
                                   struct SeverDataset **out);

/**
 * Loads a headerless numeric CSV whose last column is the label.
 */
enum SeverStatus sever_dataset_load_csv(const char *path, struct SeverDataset **out);

enum SeverStatus sever_dataset_len(const struct SeverDataset *data, size_t *out);

enum SeverStatus sever_dataset_dim(const struct SeverDataset *data, size_t *out);

/**
 * Null is a no-op.
 */
void sever_dataset_free(struct SeverDataset *data);

/**
 * Practical mode, squared loss, λ = 0.01, p = 0.05, 4 rounds.
 */
struct SeverRunConfig sever_config_default(void);

/**
 * Runs the filter loop. Squared loss uses the closed-form ridge solver,
 * hinge and logistic use projected subgradient descent.
 */
enum SeverStatus sever_run(const struct SeverDataset *data,
                           const struct SeverRunConfig *cfg,
                           struct SeverOutcome **out);

/**
 * Copies the fitted parameters into `buf` (length ≥ dimension).
 */
enum SeverStatus sever_outcome_weights(const struct SeverOutcome *o, double *buf, size_t len);

/**
 * Writes 1 for every retained sample and 0 for every removed one.
 */
enum SeverStatus sever_outcome_retained(const struct SeverOutcome *o, uint8_t *buf, size_t len);

enum SeverStatus sever_outcome_rounds(const struct SeverOutcome *o, size_t *out);

enum SeverStatus sever_outcome_removed_count(const struct SeverOutcome *o, size_t *out);

enum SeverStatus sever_outcome_achieved_gamma(const struct SeverOutcome *o, double *out);

/**
 * Null is a no-op.
 */
void sever_outcome_free(struct SeverOutcome *o);

/**
 * Filtered mean of the `n × d` rows of `points`, written to `out_mean`
 * (length `d`). `budget_exceeded` may be null.
 */
enum SeverStatus sever_robust_mean(const double *points,
                                   size_t n,
                                   size_t d,
                                   double sigma,
                                   double eps_budget,
                                   uint64_t seed,
                                   double *out_mean,
                                   bool *budget_exceeded);

/**
 * Outlier scores of the `n × d` rows: squared projection of each centered
 * row onto the top singular direction. Writes `n` values.
 */
enum SeverStatus sever_compute_scores(const double *rows,
                                      size_t n,
                                      size_t d,
                                      uint64_t seed,
                                      double *out_scores);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEVER_H */
