#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rowamp/hermitian.hpp"
#include "rowamp/rng.hpp"
#include "rowamp/types.hpp"

namespace rowamp {

// Budget for Monte-Carlo moment estimates.  Estimates are chunked with the
// fixed layout in parallel.hpp and are bit-identical for any thread count.
struct McOptions {
  std::int64_t samples = 20000;
  std::uint64_t seed = 1234;
  bool antithetic = true;  // pair each draw with its sign-flipped noise
};

class FixedNoiseDenoiser;

// Distribution of one row x in C^M.  posterior_moments() evaluates the
// pseudo-channel r = x + n, n ~ N_c(0, qr).
class RowPrior {
 public:
  virtual ~RowPrior() = default;
  virtual int dim() const = 0;
  // E{x x^H} under the prior.
  virtual CMat mean_covariance() const = 0;
  virtual void posterior_moments(const CVec& r, const CMat& qr, CVec* mean, CMat* cov) const = 0;
  virtual CVec sample(Rng& rng) const = 0;
  // log of integral P(x) N_c(y|x, noise_cov) dx.
  virtual double log_marginal(const CVec& y, const CMat& noise_cov) const = 0;
  // Same posterior but with factorizations of a fixed noise covariance
  // precomputed; used in Monte-Carlo loops.
  virtual std::unique_ptr<FixedNoiseDenoiser> denoiser(const CMat& noise_cov) const = 0;
  virtual std::string name() const = 0;
};

class FixedNoiseDenoiser {
 public:
  virtual ~FixedNoiseDenoiser() = default;
  virtual void moments(const CVec& y, CVec* mean, CMat* cov) const = 0;
  virtual double log_marginal(const CVec& y) const = 0;
};

class GaussianRowPrior final : public RowPrior {
 public:
  explicit GaussianRowPrior(CMat sigma_x);
  int dim() const override { return static_cast<int>(sigma_x_.rows()); }
  CMat mean_covariance() const override { return sigma_x_; }
  void posterior_moments(const CVec& r, const CMat& qr, CVec* mean, CMat* cov) const override;
  CVec sample(Rng& rng) const override;
  double log_marginal(const CVec& y, const CMat& noise_cov) const override;
  std::unique_ptr<FixedNoiseDenoiser> denoiser(const CMat& noise_cov) const override;
  std::string name() const override { return "gaussian"; }
  const CMat& sigma_x() const { return sigma_x_; }

 private:
  CMat sigma_x_;
};

// Spike-and-slab row prior rho N_c(0, sigma_x) + (1-rho) delta_0.  The
// activity (posterior slab weight) is computed in the log domain.
class BernoulliGaussianRowPrior final : public RowPrior {
 public:
  BernoulliGaussianRowPrior(double rho, CMat sigma_x);

  struct Posterior {
    CVec mean;
    CMat cov;
    double activity;  // P(row active | r)
  };
  Posterior posterior(const CVec& r, const CMat& qr) const;

  int dim() const override { return static_cast<int>(sigma_x_.rows()); }
  CMat mean_covariance() const override { return rho_ * sigma_x_; }
  void posterior_moments(const CVec& r, const CMat& qr, CVec* mean, CMat* cov) const override;
  CVec sample(Rng& rng) const override;
  double log_marginal(const CVec& y, const CMat& noise_cov) const override;
  std::unique_ptr<FixedNoiseDenoiser> denoiser(const CMat& noise_cov) const override;
  std::string name() const override { return "bernoulli-gaussian"; }
  double rho() const { return rho_; }
  const CMat& sigma_x() const { return sigma_x_; }

 private:
  double rho_;
  CMat sigma_x_;
  CMat slab_sqrt_;
};

// Monte-Carlo estimate of E{(x - xhat)(x - xhat)^H} for x ~ prior observed
// through y = x + n, n ~ N_c(0, noise_cov).
CMat prior_mmse_mc(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc);

// Monte-Carlo estimate of E{xhat xhat^H} on the same channel (the
// complementary statistic; equals mean_covariance() - MMSE in expectation).
CMat prior_second_moment_mc(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc);

}  // namespace rowamp
