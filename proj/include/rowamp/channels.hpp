#pragma once

#include <string>
#include <utility>

#include "rowamp/hermitian.hpp"
#include "rowamp/rng.hpp"
#include "rowamp/types.hpp"

namespace rowamp {

// Row-wise measurement channel y ~ P(y|z).  posterior_moments() evaluates
// the moments of P(y|z) N_c(z|z0, qz) / normalizer.
class RowChannel {
 public:
  virtual ~RowChannel() = default;
  virtual int dim() const = 0;
  virtual CVec sample(const CVec& z, Rng& rng) const = 0;
  // Covariance of the additive noise applied before the output map.
  virtual CMat noise_cov() const = 0;
  // Deterministic output map applied to z + w (identity for AWGN).
  virtual CVec output_map(const CVec& t) const = 0;
  virtual void posterior_moments(const CVec& y, const CVec& z0, const CMat& qz, CVec* mean, CMat* cov,
                                 bool* underflow = nullptr) const = 0;
  // log integral P(y|z) N_c(z|m, c) dz.
  virtual double log_emission(const CVec& y, const CVec& m, const CMat& c) const = 0;
  // Whether posterior_moments uses only diag(qz) and returns a diagonal cov.
  virtual bool diagonal_only() const { return false; }
  // H(y|z) per row in nats, when it does not depend on z.
  virtual double conditional_entropy_per_row() const = 0;
  // Non-null when the channel is additive Gaussian with this covariance.
  virtual const CMat* awgn_cov() const { return nullptr; }
  virtual std::string name() const = 0;
};

class AwgnRowChannel final : public RowChannel {
 public:
  explicit AwgnRowChannel(CMat sigma_w);
  int dim() const override { return static_cast<int>(sigma_w_.rows()); }
  CVec sample(const CVec& z, Rng& rng) const override;
  CMat noise_cov() const override { return sigma_w_; }
  CVec output_map(const CVec& t) const override { return t; }
  void posterior_moments(const CVec& y, const CVec& z0, const CMat& qz, CVec* mean, CMat* cov,
                         bool* underflow = nullptr) const override;
  double log_emission(const CVec& y, const CVec& m, const CMat& c) const override;
  double conditional_entropy_per_row() const override;
  const CMat* awgn_cov() const override { return &sigma_w_; }
  std::string name() const override { return "awgn"; }
  const CMat& sigma_w() const { return sigma_w_; }

 private:
  CMat sigma_w_;
  CMat sqrt_w_;
};

// Uniform mid-rise quantizer applied to each real dimension of z + w with
// w ~ N_c(0, noise_var I).  bits per real dimension, 2^bits cells over
// [-clip, clip] of width 2 clip / 2^bits; the outer cells extend to
// +-infinity but keep the midpoint of their finite part.  Values exactly on
// a boundary go to the upper cell.
class QuantizedRowChannel final : public RowChannel {
 public:
  QuantizedRowChannel(int m, int bits, double clip, double noise_var);

  int bits() const { return bits_; }
  double clip() const { return clip_; }
  double step() const { return step_; }
  double noise_var() const { return noise_var_; }

  int label_of(double v) const;
  double midpoint(int label) const;
  // [lo, hi) of a cell; outer cells are half-infinite.
  std::pair<double, double> cell_bounds(int label) const;
  // Quantize one real value to its cell midpoint.
  double quantize_value(double v) const { return midpoint(label_of(v)); }

  int dim() const override { return m_; }
  CVec sample(const CVec& z, Rng& rng) const override;
  CMat noise_cov() const override;
  CVec output_map(const CVec& t) const override;
  void posterior_moments(const CVec& y, const CVec& z0, const CMat& qz, CVec* mean, CMat* cov,
                         bool* underflow = nullptr) const override;
  double log_emission(const CVec& y, const CVec& m, const CMat& c) const override;
  bool diagonal_only() const override { return true; }
  double conditional_entropy_per_row() const override;
  std::string name() const override { return "quantized"; }

 private:
  int m_;
  int bits_;
  double clip_;
  double step_;
  double noise_var_;
};

}  // namespace rowamp
