#ifndef NETSYNC_H
#define NETSYNC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum NsStatus {
  NS_STATUS_OK = 0,
  NS_STATUS_NULL_POINTER = 1,
  NS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The interconnection matrix violates the admissibility assumption.
   */
  NS_STATUS_ASSUMPTION_VIOLATION = 3,
  /**
   * `X-` lacks full row rank: the data are not informative.
   */
  NS_STATUS_RANK_DEFICIENT = 4,
  /**
   * The candidate gain failed verification.
   */
  NS_STATUS_NOT_CERTIFIED = 5,
  /**
   * Synthesis found no gain; this is inconclusive.
   */
  NS_STATUS_INFEASIBLE = 6,
  NS_STATUS_NON_CONVERGENCE = 7,
  NS_STATUS_DIVERGED = 8,
  NS_STATUS_BUFFER_TOO_SMALL = 9,
  NS_STATUS_PANIC = 10,
} NsStatus;

typedef struct NsCertificate NsCertificate;

typedef struct NsData NsData;

typedef struct NsSpectrum NsSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *ns_last_error(void);

/**
 * Releases a string returned by this library.
 */
void ns_string_free(char *s);

/**
 * Checks the admissibility assumption on the `p x p` matrix `c`.
 * `tol <= 0` selects the default relative tolerance.
 */
enum NsStatus ns_spectrum_validate(const double *c, size_t p, double tol, struct NsSpectrum **out);

/**
 * Builds a spectrum from known eigenvalues `sigma(C) \ {mu}`.
 */
enum NsStatus ns_spectrum_from_eigenvalues(double mu,
                                           const double *lambdas,
                                           size_t count,
                                           struct NsSpectrum **out);

/**
 * Number of synchronization eigenvalues (0 for a null handle).
 */
size_t ns_spectrum_len(const struct NsSpectrum *spectrum);

/**
 * The eigenvalue `mu` of `1_p` (NaN for a null handle).
 */
double ns_spectrum_mu(const struct NsSpectrum *spectrum);

/**
 * Copies the ascending eigenvalues into `out`.
 */
enum NsStatus ns_spectrum_lambdas(const struct NsSpectrum *spectrum, double *out, size_t capacity);

void ns_spectrum_free(struct NsSpectrum *spectrum);

/**
 * Data from a record: `inputs` is `m x samples`, `states` is
 * `n x (samples + 1)`, both row-major.
 */
enum NsStatus ns_data_new(const double *inputs,
                          size_t m,
                          const double *states,
                          size_t n,
                          size_t samples,
                          struct NsData **out);

/**
 * Numerical rank of `X-` (`rank_x`) and of `[X-; U-]` (`rank_stacked`).
 */
enum NsStatus ns_data_rank(const struct NsData *data, size_t *rank_x, size_t *rank_stacked);

void ns_data_free(struct NsData *data);

/**
 * Verifies the `m x n` gain `k` against the data and spectrum. Non-positive
 * `tol` or `margin` select the defaults.
 */
enum NsStatus ns_verify_certificate(const struct NsData *data,
                                    const struct NsSpectrum *spectrum,
                                    const double *k,
                                    double tol,
                                    double margin,
                                    struct NsCertificate **out);

/**
 * Searches for a gain from data alone and returns its certificate.
 * `NS_STATUS_INFEASIBLE` is inconclusive; `NS_STATUS_RANK_DEFICIENT` is not.
 */
enum NsStatus ns_synthesize_gain(const struct NsData *data,
                                 const struct NsSpectrum *spectrum,
                                 double tol,
                                 bool enforce_all,
                                 struct NsCertificate **out);

/**
 * Gain dimensions `m x n`.
 */
enum NsStatus ns_certificate_shape(const struct NsCertificate *cert, size_t *rows, size_t *cols);

/**
 * Copies the gain, row-major, into `out`.
 */
enum NsStatus ns_certificate_gain(const struct NsCertificate *cert, double *out, size_t capacity);

/**
 * Copies the per-eigenvalue closed-loop spectral radii into `out`.
 */
enum NsStatus ns_certificate_radii(const struct NsCertificate *cert, double *out, size_t capacity);

/**
 * JSON export of the certificate; release with `ns_string_free`.
 */
enum NsStatus ns_certificate_to_json(const struct NsCertificate *cert, char **out);

void ns_certificate_free(struct NsCertificate *cert);

/**
 * Model-based gain: solves the scaled Riccati equation with
 * `gamma = lambda_min / lambda_max` and writes the `m x n` gain to `k_out`.
 * Null `q` or `r` select identity weights.
 */
enum NsStatus ns_riccati_gain(const double *a,
                              const double *b,
                              size_t n,
                              size_t m,
                              const double *q,
                              const double *r,
                              double lambda_min,
                              double lambda_max,
                              double *k_out);

/**
 * Spectral synchronization test of `k` over the spectrum. `worst_radius`
 * may be null.
 */
enum NsStatus ns_is_synchronizing(const double *a,
                                  const double *b,
                                  size_t n,
                                  size_t m,
                                  const double *k,
                                  const struct NsSpectrum *spectrum,
                                  bool *synchronized,
                                  double *worst_radius);

/**
 * Simulates the network for `horizon` steps from the stacked state `x0`
 * (length `p * n`) and writes the `horizon + 1` disagreement norms.
 */
enum NsStatus ns_simulate(const double *a,
                          const double *b,
                          size_t n,
                          size_t m,
                          const double *k,
                          const double *c,
                          size_t p,
                          const double *x0,
                          size_t horizon,
                          double *disagreement_out,
                          size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETSYNC_H */
