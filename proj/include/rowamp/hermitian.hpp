#pragma once

#include "rowamp/rng.hpp"
#include "rowamp/types.hpp"

namespace rowamp {

// Helpers for Hermitian covariance matrices.  Everything here treats the
// matrix scale as trace/M when forming relative thresholds.

// (M + M^H)/2.
CMat herm(const CMat& a);

bool is_hermitian(const CMat& a, double tol = kHermitianTol);

double min_eigenvalue(const CMat& a);

// lambda_min >= -kPsdRelTol * scale with scale = max(trace/M, |lambda|_max).
bool is_psd(const CMat& a);

// Symmetrize, then if lambda_min < 0 shift by (|lambda_min| +
// rel_jitter * trace/M) * I.  Identity on PSD inputs up to symmetrization.
CMat ensure_psd(const CMat& a, double rel_jitter = 1e-9);

// Symmetrize and floor negative eigenvalues at zero.  Sets *clipped when a
// negative eigenvalue was removed.
CMat clip_psd(const CMat& a, bool* clipped = nullptr);

// Inverse via LDLT with a residual check; on failure retries with
// escalating jitter rel_jitter * trace/M * I added to the diagonal.
// Throws SingularMatrixError when the jittered retries fail too.
CMat hermitian_inverse(const CMat& a, double rel_jitter = 1e-9);

// Exact-algebra inverse used where silently regularizing would change the
// answer; throws SingularMatrixError when the matrix is numerically singular.
CMat hermitian_inverse_strict(const CMat& a);

// Hermitian square root; eigenvalues in [-tol, 0) are clipped to zero,
// anything more negative throws NumericalError.
CMat hermitian_sqrt(const CMat& a);

// log det of a positive definite Hermitian matrix.
double log_det_pd(const CMat& a);

// log N_c(x | mean, cov) for the circular complex Gaussian
// N_c(x|a,A) = det(pi A)^-1 exp(-(x-a)^H A^-1 (x-a)).
double log_gaussian(const CVec& x, const CVec& mean, const CMat& cov);

struct GaussianProduct {
  CVec mean;
  CMat cov;
  double log_scale;  // log N_c(0 | a-b, A+B)
};

// Moments of N_c(x|a,A) N_c(x|b,B) viewed as an unnormalized Gaussian:
// cov = (A^-1 + B^-1)^-1, mean = cov (A^-1 a + B^-1 b).  Computed through
// (A+B)^-1 so a singular A or B (point mass) is fine.
GaussianProduct gaussian_product(const CVec& a, const CMat& A, const CVec& b, const CMat& B);

// Inverse of Q = I_{tau+1} (x) (A - B) + 1 1^T (x) B, assembled blockwise as
// I (x) (A-B)^-1 - 1 1^T (x) [(A-B) B^-1 (A-B) + (tau+1)(A-B)]^-1.
// Requires B and A-B invertible.
CMat block_symmetric_inverse(const CMat& A, const CMat& B, int tau);

// Draw from N_c(mean, cov); cov = 0 returns mean.  Throws NumericalError on
// a non-PSD cov.
CVec sample_complex_gaussian(Rng& rng, const CVec& mean, const CMat& cov);

}  // namespace rowamp
