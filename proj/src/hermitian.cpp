#include "rowamp/hermitian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace rowamp {

namespace {

double trace_scale(const CMat& a) {
  const double t = std::abs(a.trace().real()) / std::max<Eigen::Index>(a.rows(), 1);
  return std::max(t, 1e-300);
}

}  // namespace

CMat herm(const CMat& a) { return 0.5 * (a + a.adjoint()); }

bool is_hermitian(const CMat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_eigenvalue(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  const double scale = std::max({std::abs(a.trace().real()) / std::max<Eigen::Index>(a.rows(), 1), hi, 1e-300});
  return lo >= -kPsdRelTol * scale;
}

CMat ensure_psd(const CMat& a, double rel_jitter) {
  CMat h = herm(a);
  const double lo = min_eigenvalue(h);
  if (lo < 0.0) {
    const double shift = -lo + rel_jitter * trace_scale(h);
    h += shift * CMat::Identity(h.rows(), h.cols());
  }
  return h;
}

CMat clip_psd(const CMat& a, bool* clipped) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a));
  RVec ev = es.eigenvalues();
  bool any = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < 0.0) {
      ev[i] = 0.0;
      any = true;
    }
  }
  if (clipped) *clipped = any;
  if (!any) return herm(a);
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

// LDLT inverse attempt; returns false when the factorization or the
// residual check fails.
bool try_inverse(const CMat& a, CMat& out) {
  Eigen::LDLT<CMat> ldlt(a);
  if (ldlt.info() != Eigen::Success) return false;
  const CMat id = CMat::Identity(a.rows(), a.cols());
  out = ldlt.solve(id);
  if (!out.allFinite()) return false;
  const double resid = (a * out - id).cwiseAbs().maxCoeff();
  return resid <= 1e-8;
}

}  // namespace

CMat hermitian_inverse(const CMat& a, double rel_jitter) {
  CMat h = herm(a);
  CMat out;
  if (try_inverse(h, out)) return out;
  double jit = rel_jitter * trace_scale(h);
  for (int attempt = 0; attempt < 3; ++attempt) {
    const CMat hj = h + jit * CMat::Identity(h.rows(), h.cols());
    if (try_inverse(hj, out)) return out;
    jit *= 10.0;
  }
  throw SingularMatrixError("hermitian_inverse: matrix singular beyond jitter range");
}

CMat hermitian_inverse_strict(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a));
  const RVec& ev = es.eigenvalues();
  const double hi = ev.cwiseAbs().maxCoeff();
  const double lo = ev.cwiseAbs().minCoeff();
  if (lo <= 1e-14 * std::max(hi, 1.0)) {
    throw SingularMatrixError("hermitian_inverse_strict: matrix is singular");
  }
  return es.eigenvectors() * ev.cwiseInverse().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

CMat hermitian_sqrt(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a));
  RVec ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), trace_scale(a));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < 0.0) {
      if (ev[i] < -kPsdRelTol * scale) {
        throw NumericalError("hermitian_sqrt: matrix is not PSD");
      }
      ev[i] = 0.0;
    }
  }
  return es.eigenvectors() * ev.cwiseSqrt().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

double log_det_pd(const CMat& a) {
  Eigen::LDLT<CMat> ldlt(herm(a));
  if (ldlt.info() != Eigen::Success) {
    throw SingularMatrixError("log_det_pd: factorization failed");
  }
  double acc = 0.0;
  const auto d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double di = d[i].real();
    if (!(di > 0.0)) throw SingularMatrixError("log_det_pd: matrix is not positive definite");
    acc += std::log(di);
  }
  return acc;
}

namespace {

bool pd_log_det(const Eigen::LDLT<CMat>& f, double* logdet) {
  if (f.info() != Eigen::Success) return false;
  double acc = 0.0;
  const auto dv = f.vectorD();
  for (Eigen::Index i = 0; i < dv.size(); ++i) {
    const double di = dv[i].real();
    if (!(di > 0.0)) return false;
    acc += std::log(di);
  }
  *logdet = acc;
  return true;
}

}  // namespace

double log_gaussian(const CVec& x, const CVec& mean, const CMat& cov) {
  const Eigen::Index m = x.size();
  CMat c = herm(cov);
  Eigen::LDLT<CMat> ldlt(c);
  double logdet = 0.0;
  if (!pd_log_det(ldlt, &logdet)) {
    c += 1e-12 * trace_scale(c) * CMat::Identity(m, m);
    ldlt.compute(c);
    if (!pd_log_det(ldlt, &logdet)) {
      throw SingularMatrixError("log_gaussian: covariance is not positive definite");
    }
  }
  const CVec d = x - mean;
  const double quad = d.dot(ldlt.solve(d)).real();
  return -static_cast<double>(m) * std::log(M_PI) - logdet - quad;
}

GaussianProduct gaussian_product(const CVec& a, const CMat& A, const CVec& b, const CMat& B) {
  const CMat sum_inv = hermitian_inverse(A + B);
  GaussianProduct out;
  // cov = (A^-1 + B^-1)^-1 = A (A+B)^-1 B; mean = B(A+B)^-1 a + A(A+B)^-1 b.
  out.cov = herm(A * sum_inv * B);
  out.mean = B * (sum_inv * a) + A * (sum_inv * b);
  out.log_scale = log_gaussian(a - b, CVec::Zero(a.size()), A + B);
  return out;
}

CMat block_symmetric_inverse(const CMat& A, const CMat& B, int tau) {
  if (tau < 0) throw ConfigError("block_symmetric_inverse: tau must be >= 0");
  const Eigen::Index m = A.rows();
  const CMat d = A - B;
  const CMat d_inv = hermitian_inverse_strict(d);
  const CMat b_inv = hermitian_inverse_strict(B);
  const CMat k = hermitian_inverse_strict(d * b_inv * d + static_cast<double>(tau + 1) * d);
  const Eigen::Index blocks = tau + 1;
  CMat out(blocks * m, blocks * m);
  for (Eigen::Index i = 0; i < blocks; ++i) {
    for (Eigen::Index j = 0; j < blocks; ++j) {
      out.block(i * m, j * m, m, m) = (i == j) ? CMat(d_inv - k) : CMat(-k);
    }
  }
  return out;
}

CVec sample_complex_gaussian(Rng& rng, const CVec& mean, const CMat& cov) {
  if (!is_hermitian(cov, 1e-10)) {
    throw NumericalError("sample_complex_gaussian: covariance is not Hermitian");
  }
  const CMat s = hermitian_sqrt(cov);
  CVec w(mean.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.cnormal();
  return mean + s * w;
}

}  // namespace rowamp
