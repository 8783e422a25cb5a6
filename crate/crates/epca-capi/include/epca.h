#ifndef EPCA_H
#define EPCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum EpcaStatus {
  EpcaStatus_Ok = 0,
  EpcaStatus_InvalidInput = 1,
  EpcaStatus_ShapeError = 2,
  EpcaStatus_InvalidRank = 3,
  EpcaStatus_IoError = 4,
  EpcaStatus_NullPointer = 5,
  EpcaStatus_Panic = 6,
} EpcaStatus;

/**
 * Opaque ensemble PCA model with uncertainty bands.
 */
typedef struct EpcaEnsembleModel EpcaEnsembleModel;

/**
 * Opaque row-major matrix of samples by features.
 */
typedef struct EpcaMatrix EpcaMatrix;

/**
 * Opaque classical PCA model.
 */
typedef struct EpcaPcaModel EpcaPcaModel;

/**
 * Opaque Robust PCA decomposition result.
 */
typedef struct EpcaRpcaResult EpcaRpcaResult;

/**
 * Ensemble PCA parameters. `bag_size = 0` uses the dataset size.
 */
typedef struct EpcaEnsembleOptions {
  uintptr_t bags;
  uintptr_t bag_size;
  uintptr_t d;
  uint64_t seed;
  double confidence;
} EpcaEnsembleOptions;

/**
 * Robust PCA parameters. `mu0 = 0` picks the scale automatically;
 * `timeout < 0` disables the wall-clock budget.
 */
typedef struct EpcaRpcaOptions {
  double alpha;
  double mu0;
  double rho;
  double tol;
  uintptr_t max_iter;
  double timeout;
} EpcaRpcaOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *epca_last_error_message(void);

/**
 * Default ensemble options: 100 bags, full-size bags, 95% bands.
 */
struct EpcaEnsembleOptions epca_ensemble_options_default(uintptr_t d, uint64_t seed);

/**
 * Default RPCA options: alpha 0.20, 120 s budget.
 */
struct EpcaRpcaOptions epca_rpca_options_default(void);

/**
 * Create a matrix from a row-major buffer of `nrows * ncols` doubles.
 *
 * # Safety
 * `data` must point to `nrows * ncols` readable doubles and `out` must be
 * a valid location for one pointer.
 */
enum EpcaStatus epca_matrix_new(const double *data,
                                uintptr_t nrows,
                                uintptr_t ncols,
                                struct EpcaMatrix **out);

/**
 * # Safety
 * `matrix` must be a pointer from this library or null.
 */
void epca_matrix_free(struct EpcaMatrix *matrix);

/**
 * # Safety
 * `matrix` must be a valid matrix handle.
 */
uintptr_t epca_matrix_nrows(const struct EpcaMatrix *matrix);

/**
 * # Safety
 * `matrix` must be a valid matrix handle.
 */
uintptr_t epca_matrix_ncols(const struct EpcaMatrix *matrix);

/**
 * Copy the matrix into a caller buffer of `nrows * ncols` doubles,
 * row-major.
 *
 * # Safety
 * `out` must hold at least `nrows * ncols` writable doubles.
 */
enum EpcaStatus epca_matrix_copy(const struct EpcaMatrix *matrix, double *out, uintptr_t len);

/**
 * Fit classical PCA with `d` components.
 *
 * # Safety
 * `matrix` must be a valid handle and `out` a valid location.
 */
enum EpcaStatus epca_pca_fit(const struct EpcaMatrix *matrix,
                             uintptr_t d,
                             struct EpcaPcaModel **out);

/**
 * # Safety
 * `model` must be a pointer from this library or null.
 */
void epca_pca_free(struct EpcaPcaModel *model);

/**
 * # Safety
 * `model` must be a valid model handle.
 */
uintptr_t epca_pca_rank(const struct EpcaPcaModel *model);

/**
 * # Safety
 * `model` must be a valid model handle.
 */
uintptr_t epca_pca_dim(const struct EpcaPcaModel *model);

/**
 * Copy the `d` unit components, row-major (`d * dim` doubles).
 *
 * # Safety
 * `out` must hold `epca_pca_rank * epca_pca_dim` writable doubles.
 */
enum EpcaStatus epca_pca_components(const struct EpcaPcaModel *model, double *out, uintptr_t len);

/**
 * Copy the `d` eigenvalues, descending.
 *
 * # Safety
 * `out` must hold `epca_pca_rank` writable doubles.
 */
enum EpcaStatus epca_pca_eigenvalues(const struct EpcaPcaModel *model, double *out, uintptr_t len);

/**
 * Fit ensemble PCA.
 *
 * # Safety
 * `matrix` must be a valid handle and `out` a valid location.
 */
enum EpcaStatus epca_ensemble_fit(const struct EpcaMatrix *matrix,
                                  struct EpcaEnsembleOptions options,
                                  struct EpcaEnsembleModel **out);

/**
 * # Safety
 * `model` must be a pointer from this library or null.
 */
void epca_ensemble_free(struct EpcaEnsembleModel *model);

/**
 * # Safety
 * `model` must be a valid model handle.
 */
uintptr_t epca_ensemble_rank(const struct EpcaEnsembleModel *model);

/**
 * # Safety
 * `model` must be a valid model handle.
 */
uintptr_t epca_ensemble_dim(const struct EpcaEnsembleModel *model);

/**
 * Copy the aggregated unit components, row-major (`d * dim` doubles).
 *
 * # Safety
 * `out` must hold `rank * dim` writable doubles.
 */
enum EpcaStatus epca_ensemble_components(const struct EpcaEnsembleModel *model,
                                         double *out,
                                         uintptr_t len);

/**
 * Copy the per-component eigenvalue means.
 *
 * # Safety
 * `out` must hold `rank` writable doubles.
 */
enum EpcaStatus epca_ensemble_eigenvalue_mean(const struct EpcaEnsembleModel *model,
                                              double *out,
                                              uintptr_t len);

/**
 * Copy the per-component eigenvalue variances.
 *
 * # Safety
 * `out` must hold `rank` writable doubles.
 */
enum EpcaStatus epca_ensemble_eigenvalue_variance(const struct EpcaEnsembleModel *model,
                                                  double *out,
                                                  uintptr_t len);

/**
 * Copy the confidence band for component `k`: `dim` lower bounds followed
 * by `dim` upper bounds.
 *
 * # Safety
 * `out` must hold `2 * dim` writable doubles.
 */
enum EpcaStatus epca_ensemble_confidence_band(const struct EpcaEnsembleModel *model,
                                              uintptr_t k,
                                              double *out,
                                              uintptr_t len);

/**
 * Run Robust PCA (principal component pursuit).
 *
 * # Safety
 * `matrix` must be a valid handle and `out` a valid location.
 */
enum EpcaStatus epca_rpca_run(const struct EpcaMatrix *matrix,
                              struct EpcaRpcaOptions options,
                              struct EpcaRpcaResult **out);

/**
 * # Safety
 * `result` must be a pointer from this library or null.
 */
void epca_rpca_free(struct EpcaRpcaResult *result);

/**
 * # Safety
 * `result` must be a valid result handle.
 */
uintptr_t epca_rpca_iterations(const struct EpcaRpcaResult *result);

/**
 * # Safety
 * `result` must be a valid result handle.
 */
bool epca_rpca_converged(const struct EpcaRpcaResult *result);

/**
 * # Safety
 * `result` must be a valid result handle.
 */
bool epca_rpca_timed_out(const struct EpcaRpcaResult *result);

/**
 * # Safety
 * `result` must be a valid result handle.
 */
double epca_rpca_residual(const struct EpcaRpcaResult *result);

/**
 * New matrix handle holding the low-rank estimate L.
 *
 * # Safety
 * `result` must be a valid result handle and `out` a valid location.
 */
enum EpcaStatus epca_rpca_low_rank(const struct EpcaRpcaResult *result, struct EpcaMatrix **out);

/**
 * New matrix handle holding the sparse estimate S.
 *
 * # Safety
 * `result` must be a valid result handle and `out` a valid location.
 */
enum EpcaStatus epca_rpca_sparse(const struct EpcaRpcaResult *result, struct EpcaMatrix **out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* EPCA_H */
