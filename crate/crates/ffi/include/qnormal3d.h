#ifndef QNORMAL3D_H
#define QNORMAL3D_H

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum QnStatus {
  QN_STATUS_OK = 0,
  QN_STATUS_INVALID_PARAMETER = 1,
  QN_STATUS_DOMAIN = 2,
  QN_STATUS_NON_CONVERGENCE = 3,
  QN_STATUS_DEGENERATE_CONDITIONING = 4,
  QN_STATUS_DEGENERATE_RECURRENCE = 5,
  QN_STATUS_INSUFFICIENT_SAMPLES = 6,
  QN_STATUS_NULL_POINTER = 7,
  QN_STATUS_PANIC = 8,
} QnStatus;

// Representation of the three-dimensional density.
typedef enum QnDensityForm {
  QN_DENSITY_FORM_PRODUCT = 0,
  QN_DENSITY_FORM_SERIES = 1,
  QN_DENSITY_FORM_CLOSED = 2,
} QnDensityForm;

// Representation of the one-dimensional marginal.
typedef enum QnMarginalForm {
  QN_MARGINAL_FORM_SQUARES = 0,
  QN_MARGINAL_FORM_ROGERS = 1,
  QN_MARGINAL_FORM_EVEN_SERIES = 2,
  QN_MARGINAL_FORM_RATIO = 3,
} QnMarginalForm;

// Opaque model handle.
typedef struct QnModel QnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *qn_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qn_version(void);

// Creates a model with default truncation settings.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum QnStatus qn_model_new(double rho12,
                           double rho13,
                           double rho23,
                           double q,
                           struct QnModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must be null or a handle from [`qn_model_new`] not yet freed.
void qn_model_free(struct QnModel *model);

// Half-width L of the support [-L, L].
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_half_width(const struct QnModel *model, double *out);

// Joint density of (X, Y, Z).
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_f3d(const struct QnModel *model,
                           double x,
                           double y,
                           double z,
                           enum QnDensityForm form,
                           double *out);

// Joint density of (Y, Z).
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_fyz(const struct QnModel *model, double y, double z, double *out);

// Marginal density of Z.
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_fz(const struct QnModel *model,
                          double z,
                          enum QnMarginalForm form,
                          double *out);

// Density of X given Y = y, Z = z.
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_fx_given_yz(const struct QnModel *model,
                                   double x,
                                   double y,
                                   double z,
                                   double *out);

// Density of (Y, Z) given X = x.
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_fyz_given_x(const struct QnModel *model,
                                   double y,
                                   double z,
                                   double x,
                                   double *out);

// Covariance of Y and Z.
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_cov_yz(const struct QnModel *model, double *out);

// E H_m(Y) H_n(Z).
//
// # Safety
// `model` must be null or a live handle; `out` must be null or writable.
enum QnStatus qn_model_mixed_moment(const struct QnModel *model,
                                    uint32_t m,
                                    uint32_t n,
                                    double *out);

// Draws `n` points by Gibbs sampling with default burn-in, thinning and
// grid, writing x, y, z triples to `out`, which must hold `3 n` values.
//
// # Safety
// `model` must be null or a live handle; `out` must be null or valid for
// `3 n` writes.
enum QnStatus qn_model_sample(const struct QnModel *model, uint64_t seed, uintptr_t n, double *out);

// q-Normal density f_N(x|q).
//
// # Safety
// `out` must be null or writable.
enum QnStatus qn_f_n(double x, double q, double *out);

// Conditional q-Normal density f_CN(x|y,rho,q).
//
// # Safety
// `out` must be null or writable.
enum QnStatus qn_f_cn(double x, double y, double rho, double q, double *out);

// Rogers density f_R(x|beta,q).
//
// # Safety
// `out` must be null or writable.
enum QnStatus qn_f_r(double x, double beta, double q, double *out);

// Poisson–Mehler kernel as an infinite product.
//
// # Safety
// `out` must be null or writable.
enum QnStatus qn_pm_kernel(double x, double y, double rho, double q, double *out);

// Variance of the Z marginal for product correlation r.
//
// # Safety
// `out` must be null or writable.
enum QnStatus qn_var_z(double r, double q, double *out);

// Writes H_0(x|q), ..., H_n(x|q) to `out`, which must hold `n + 1` values.
//
// # Safety
// `out` must be null or valid for `n + 1` writes.
enum QnStatus qn_q_hermite(uint32_t n, double x, double q, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNORMAL3D_H */
