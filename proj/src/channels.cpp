#include "rowamp/channels.hpp"

#include <cmath>
#include <limits>

#include "rowamp/truncated_normal.hpp"

namespace rowamp {

AwgnRowChannel::AwgnRowChannel(CMat sigma_w) : sigma_w_(herm(sigma_w)) {
  if (sigma_w_.rows() != sigma_w_.cols() || sigma_w_.rows() < 1) {
    throw ConfigError("AwgnRowChannel: noise covariance must be square and non-empty");
  }
  if (!is_psd(sigma_w_)) {
    throw ConfigError("AwgnRowChannel: noise covariance must be PSD");
  }
  sqrt_w_ = hermitian_sqrt(sigma_w_);
}

CVec AwgnRowChannel::sample(const CVec& z, Rng& rng) const {
  CVec w(dim());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.cnormal();
  return z + sqrt_w_ * w;
}

void AwgnRowChannel::posterior_moments(const CVec& y, const CVec& z0, const CMat& qz, CVec* mean, CMat* cov,
                                       bool* underflow) const {
  if (underflow) *underflow = false;
  // Posterior of z under prior N_c(z0, qz) and likelihood N_c(y|z, Sw):
  // cov = (Sw^-1 + qz^-1)^-1, mean = cov (Sw^-1 y + qz^-1 z0), evaluated
  // through (qz + Sw)^-1 so a singular qz is harmless.
  const CMat sum_inv = hermitian_inverse(qz + sigma_w_);
  *cov = herm(qz * sum_inv * sigma_w_);
  *mean = sigma_w_ * (sum_inv * z0) + qz * (sum_inv * y);
}

double AwgnRowChannel::log_emission(const CVec& y, const CVec& m, const CMat& c) const {
  return log_gaussian(y, m, c + sigma_w_);
}

double AwgnRowChannel::conditional_entropy_per_row() const {
  const double m = static_cast<double>(dim());
  return m * std::log(M_PI) + log_det_pd(sigma_w_) + m;
}

QuantizedRowChannel::QuantizedRowChannel(int m, int bits, double clip, double noise_var)
    : m_(m), bits_(bits), clip_(clip), noise_var_(noise_var) {
  if (m < 1) throw ConfigError("QuantizedRowChannel: dimension must be >= 1");
  if (bits < 1 || bits > 16) throw ConfigError("QuantizedRowChannel: bits must be in [1, 16]");
  if (!(clip > 0.0)) throw ConfigError("QuantizedRowChannel: clip must be positive");
  if (!(noise_var >= 0.0)) throw ConfigError("QuantizedRowChannel: noise_var must be >= 0");
  step_ = 2.0 * clip_ / static_cast<double>(1 << bits_);
}

int QuantizedRowChannel::label_of(double v) const {
  const int cells = 1 << bits_;
  const double k = std::floor((v + clip_) / step_);
  if (k < 0.0) return 0;
  if (k >= static_cast<double>(cells)) return cells - 1;
  return static_cast<int>(k);
}

double QuantizedRowChannel::midpoint(int label) const {
  return -clip_ + (static_cast<double>(label) + 0.5) * step_;
}

std::pair<double, double> QuantizedRowChannel::cell_bounds(int label) const {
  const int cells = 1 << bits_;
  const double inf = std::numeric_limits<double>::infinity();
  const double lo = label == 0 ? -inf : -clip_ + static_cast<double>(label) * step_;
  const double hi = label == cells - 1 ? inf : -clip_ + static_cast<double>(label + 1) * step_;
  return {lo, hi};
}

CVec QuantizedRowChannel::sample(const CVec& z, Rng& rng) const {
  const double s = std::sqrt(noise_var_ / 2.0);
  CVec y(m_);
  for (int i = 0; i < m_; ++i) {
    const double re = z[i].real() + s * rng.normal();
    const double im = z[i].imag() + s * rng.normal();
    y[i] = cplx(quantize_value(re), quantize_value(im));
  }
  return y;
}

CMat QuantizedRowChannel::noise_cov() const {
  return noise_var_ * CMat::Identity(m_, m_);
}

CVec QuantizedRowChannel::output_map(const CVec& t) const {
  CVec y(m_);
  for (int i = 0; i < m_; ++i) {
    y[i] = cplx(quantize_value(t[i].real()), quantize_value(t[i].imag()));
  }
  return y;
}

void QuantizedRowChannel::posterior_moments(const CVec& y, const CVec& z0, const CMat& qz, CVec* mean, CMat* cov,
                                            bool* underflow) const {
  // Per real dimension d: t = z + w is N(z0_d, qd + sw2) truncated to the
  // observed cell, with qd the prior variance of the real part and
  // sw2 = noise_var/2.  Then
  //   E[z|y]  = z0_d + (qd / (qd + sw2)) (E[t|cell] - z0_d)
  //   Var[z|y] = qd - (qd^2 / (qd + sw2)) (1 - Var[t|cell] / (qd + sw2)).
  const double sw2 = noise_var_ / 2.0;
  bool any_underflow = false;
  *mean = CVec(m_);
  *cov = CMat::Zero(m_, m_);
  for (int i = 0; i < m_; ++i) {
    const double qd = std::max(qz(i, i).real() / 2.0, 0.0);
    double part_mean[2];
    double part_var[2];
    const double z0d[2] = {z0[i].real(), z0[i].imag()};
    const double yd[2] = {y[i].real(), y[i].imag()};
    for (int d = 0; d < 2; ++d) {
      const auto [lo, hi] = cell_bounds(label_of(yd[d]));
      const double vt = qd + sw2;
      if (qd <= 0.0) {
        part_mean[d] = z0d[d];
        part_var[d] = 0.0;
        continue;
      }
      const TruncatedMoments tm = truncated_normal_moments(z0d[d], std::sqrt(vt), lo, hi);
      any_underflow = any_underflow || tm.underflow;
      const double g = qd / vt;
      part_mean[d] = z0d[d] + g * (tm.mean - z0d[d]);
      part_var[d] = std::max(qd - g * qd * (1.0 - tm.var / vt), 0.0);
    }
    (*mean)[i] = cplx(part_mean[0], part_mean[1]);
    (*cov)(i, i) = part_var[0] + part_var[1];
  }
  if (underflow) *underflow = any_underflow;
}

double QuantizedRowChannel::log_emission(const CVec& y, const CVec& m, const CMat& c) const {
  const double sw2 = noise_var_ / 2.0;
  double acc = 0.0;
  for (int i = 0; i < m_; ++i) {
    const double cd = std::max(c(i, i).real() / 2.0, 0.0);
    const double sigma = std::sqrt(cd + sw2);
    const double md[2] = {m[i].real(), m[i].imag()};
    const double yd[2] = {y[i].real(), y[i].imag()};
    for (int d = 0; d < 2; ++d) {
      const auto [lo, hi] = cell_bounds(label_of(yd[d]));
      acc += truncated_normal_moments(md[d], sigma, lo, hi).log_prob;
    }
  }
  return acc;
}

double QuantizedRowChannel::conditional_entropy_per_row() const {
  throw UnsupportedError("quantized channel: H(y|z) has no closed form here");
}

}  // namespace rowamp
