#include "rowamp/priors.hpp"

#include <cmath>
#include <vector>

#include "rowamp/parallel.hpp"

namespace rowamp {

namespace {

void check_cov(const CMat& sigma, const char* who) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1) {
    throw ConfigError(std::string(who) + ": covariance must be square and non-empty");
  }
  if (!is_hermitian(sigma, 1e-10)) {
    throw ConfigError(std::string(who) + ": covariance must be Hermitian");
  }
  if (!is_psd(sigma)) {
    throw ConfigError(std::string(who) + ": covariance must be PSD");
  }
}

}  // namespace

GaussianRowPrior::GaussianRowPrior(CMat sigma_x) : sigma_x_(std::move(sigma_x)) {
  check_cov(sigma_x_, "GaussianRowPrior");
  sigma_x_ = herm(sigma_x_);
}

void GaussianRowPrior::posterior_moments(const CVec& r, const CMat& qr, CVec* mean, CMat* cov) const {
  // xhat = Sx (Sx + Qr)^-1 r; posterior cov = Sx (Sx + Qr)^-1 Qr.
  const CMat sum_inv = hermitian_inverse(sigma_x_ + qr);
  const CMat gain = sigma_x_ * sum_inv;
  *mean = gain * r;
  *cov = herm(gain * qr);
}

CVec GaussianRowPrior::sample(Rng& rng) const {
  return sample_complex_gaussian(rng, CVec::Zero(dim()), sigma_x_);
}

double GaussianRowPrior::log_marginal(const CVec& y, const CMat& noise_cov) const {
  return log_gaussian(y, CVec::Zero(dim()), sigma_x_ + noise_cov);
}

BernoulliGaussianRowPrior::BernoulliGaussianRowPrior(double rho, CMat sigma_x)
    : rho_(rho), sigma_x_(std::move(sigma_x)) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ConfigError("BernoulliGaussianRowPrior: rho must be in [0, 1]");
  }
  check_cov(sigma_x_, "BernoulliGaussianRowPrior");
  sigma_x_ = herm(sigma_x_);
  slab_sqrt_ = hermitian_sqrt(sigma_x_);
}

BernoulliGaussianRowPrior::Posterior BernoulliGaussianRowPrior::posterior(const CVec& r, const CMat& qr) const {
  Posterior out;
  const Eigen::Index m = dim();
  if (rho_ <= 0.0) {
    out.mean = CVec::Zero(m);
    out.cov = CMat::Zero(m, m);
    out.activity = 0.0;
    return out;
  }
  const CMat sum_inv = hermitian_inverse(sigma_x_ + qr);
  const CMat gain = sigma_x_ * sum_inv;        // = Gamma Qr^-1
  const CVec p = gain * r;                     // slab posterior mean
  const CMat gamma = herm(gain * qr);          // slab posterior covariance
  double activity = 1.0;
  if (rho_ < 1.0) {
    // log odds of the slab against the spike, both as densities of r.
    const double a1 = std::log(rho_) + log_gaussian(r, CVec::Zero(m), sigma_x_ + qr);
    const double a0 = std::log1p(-rho_) + log_gaussian(r, CVec::Zero(m), qr);
    const double d = a0 - a1;
    activity = d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  }
  out.mean = activity * p;
  // C (Gamma + p p^H) - xhat xhat^H = C Gamma + C(1-C) p p^H, PSD by design.
  out.cov = herm(activity * gamma + activity * (1.0 - activity) * (p * p.adjoint()));
  out.activity = activity;
  return out;
}

void BernoulliGaussianRowPrior::posterior_moments(const CVec& r, const CMat& qr, CVec* mean, CMat* cov) const {
  Posterior p = posterior(r, qr);
  *mean = std::move(p.mean);
  *cov = std::move(p.cov);
}

CVec BernoulliGaussianRowPrior::sample(Rng& rng) const {
  // Gate draw first so the stream layout is fixed regardless of activity.
  const bool active = rng.uniform() < rho_;
  CVec w(dim());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.cnormal();
  if (!active) return CVec::Zero(dim());
  return slab_sqrt_ * w;
}

double BernoulliGaussianRowPrior::log_marginal(const CVec& y, const CMat& noise_cov) const {
  const Eigen::Index m = dim();
  if (rho_ >= 1.0) return log_gaussian(y, CVec::Zero(m), sigma_x_ + noise_cov);
  if (rho_ <= 0.0) return log_gaussian(y, CVec::Zero(m), noise_cov);
  const double a1 = std::log(rho_) + log_gaussian(y, CVec::Zero(m), sigma_x_ + noise_cov);
  const double a0 = std::log1p(-rho_) + log_gaussian(y, CVec::Zero(m), noise_cov);
  const double hi = std::max(a1, a0);
  return hi + std::log(std::exp(a1 - hi) + std::exp(a0 - hi));
}

namespace {

class GaussianDenoiser final : public FixedNoiseDenoiser {
 public:
  GaussianDenoiser(const CMat& sigma_x, const CMat& qn) {
    const Eigen::Index m = sigma_x.rows();
    sum_ = sigma_x + qn;
    sum_inv_ = hermitian_inverse(sum_);
    gain_ = sigma_x * sum_inv_;
    cov_ = herm(gain_ * qn);
    log_norm_ = -static_cast<double>(m) * std::log(M_PI) - log_det_pd(sum_);
  }
  void moments(const CVec& y, CVec* mean, CMat* cov) const override {
    *mean = gain_ * y;
    *cov = cov_;
  }
  double log_marginal(const CVec& y) const override {
    return log_norm_ - y.dot(sum_inv_ * y).real();
  }

 private:
  CMat sum_, sum_inv_, gain_, cov_;
  double log_norm_;
};

class BgDenoiser final : public FixedNoiseDenoiser {
 public:
  BgDenoiser(double rho, const CMat& sigma_x, const CMat& qn) : rho_(rho) {
    const Eigen::Index m = sigma_x.rows();
    const CMat sum = sigma_x + qn;
    sum_inv_ = hermitian_inverse(sum);
    qn_inv_ = hermitian_inverse(qn);
    gain_ = sigma_x * sum_inv_;
    gamma_ = herm(gain_ * qn);
    log_norm1_ = -static_cast<double>(m) * std::log(M_PI) - log_det_pd(sum);
    log_norm0_ = -static_cast<double>(m) * std::log(M_PI) - log_det_pd(qn);
  }
  void moments(const CVec& y, CVec* mean, CMat* cov) const override {
    const double c = activity(y);
    const CVec p = gain_ * y;
    *mean = c * p;
    *cov = herm(c * gamma_ + c * (1.0 - c) * (p * p.adjoint()));
  }
  double log_marginal(const CVec& y) const override {
    if (rho_ >= 1.0) return log_norm1_ - y.dot(sum_inv_ * y).real();
    if (rho_ <= 0.0) return log_norm0_ - y.dot(qn_inv_ * y).real();
    const double a1 = std::log(rho_) + log_norm1_ - y.dot(sum_inv_ * y).real();
    const double a0 = std::log1p(-rho_) + log_norm0_ - y.dot(qn_inv_ * y).real();
    const double hi = std::max(a1, a0);
    return hi + std::log(std::exp(a1 - hi) + std::exp(a0 - hi));
  }

 private:
  double activity(const CVec& y) const {
    if (rho_ >= 1.0) return 1.0;
    if (rho_ <= 0.0) return 0.0;
    const double a1 = std::log(rho_) + log_norm1_ - y.dot(sum_inv_ * y).real();
    const double a0 = std::log1p(-rho_) + log_norm0_ - y.dot(qn_inv_ * y).real();
    const double d = a0 - a1;
    return d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  }

  double rho_;
  CMat sum_inv_, qn_inv_, gain_, gamma_;
  double log_norm1_, log_norm0_;
};

}  // namespace

std::unique_ptr<FixedNoiseDenoiser> GaussianRowPrior::denoiser(const CMat& noise_cov) const {
  return std::make_unique<GaussianDenoiser>(sigma_x_, noise_cov);
}

std::unique_ptr<FixedNoiseDenoiser> BernoulliGaussianRowPrior::denoiser(const CMat& noise_cov) const {
  return std::make_unique<BgDenoiser>(rho_, sigma_x_, noise_cov);
}

namespace {

// Shared Monte-Carlo core: accumulates posterior covariances (the
// Rao-Blackwellized error estimate, exact because the denoiser matches the
// sampling noise) and estimate outer products over y = x + n in fixed chunk
// order.
struct PriorMcSums {
  CMat err;
  CMat second;
  std::int64_t count = 0;
};

PriorMcSums prior_mc_core(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc) {
  if (mc.samples < 1) throw ConfigError("prior mc: samples must be >= 1");
  const Eigen::Index m = prior.dim();
  const CMat noise_sqrt = hermitian_sqrt(herm(noise_cov));
  const auto den = prior.denoiser(herm(noise_cov));
  const std::int64_t draws = mc.antithetic ? (mc.samples + 1) / 2 : mc.samples;
  const std::ptrdiff_t chunks = par::chunk_count(draws);
  const Rng base(mc.seed);
  std::vector<PriorMcSums> partial(chunks);

  par::parallel_for(chunks, [&](std::ptrdiff_t c) {
    Rng rng = base.substream(static_cast<std::uint64_t>(c));
    const std::int64_t lo = c * par::kMcChunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + par::kMcChunk, draws);
    PriorMcSums acc;
    acc.err = CMat::Zero(m, m);
    acc.second = CMat::Zero(m, m);
    CVec xhat(m);
    CMat qhat(m, m);
    for (std::int64_t i = lo; i < hi; ++i) {
      const CVec x = prior.sample(rng);
      CVec w(m);
      for (Eigen::Index k = 0; k < m; ++k) w[k] = rng.cnormal();
      const CVec n = noise_sqrt * w;
      for (int half = 0; half < (mc.antithetic ? 2 : 1); ++half) {
        const CVec y = half == 0 ? CVec(x + n) : CVec(x - n);
        den->moments(y, &xhat, &qhat);
        acc.err += qhat;
        acc.second.noalias() += xhat * xhat.adjoint();
        ++acc.count;
      }
    }
    partial[c] = std::move(acc);
  });

  PriorMcSums total;
  total.err = CMat::Zero(m, m);
  total.second = CMat::Zero(m, m);
  for (const auto& p : partial) {
    total.err += p.err;
    total.second += p.second;
    total.count += p.count;
  }
  return total;
}

}  // namespace

CMat prior_mmse_mc(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc) {
  const PriorMcSums s = prior_mc_core(prior, noise_cov, mc);
  return herm(s.err / static_cast<double>(s.count));
}

CMat prior_second_moment_mc(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc) {
  const PriorMcSums s = prior_mc_core(prior, noise_cov, mc);
  return herm(s.second / static_cast<double>(s.count));
}

}  // namespace rowamp
