#include "rowamp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rowamp/parallel.hpp"

namespace rowamp {

CMat channel_second_moment_mc(const RowChannel& channel, const CMat& a, const CMat& b, double alpha,
                              const McOptions& mc) {
  if (mc.samples < 1) throw ConfigError("channel mc: samples must be >= 1");
  const Eigen::Index m = a.rows();
  const CMat b_sqrt = hermitian_sqrt(herm(b)) / std::sqrt(alpha);
  const CMat cond_cov = herm((a - b) / alpha);
  const CMat cond_sqrt = hermitian_sqrt(cond_cov);
  const std::ptrdiff_t chunks = par::chunk_count(mc.samples);
  const Rng base(mc.seed);
  std::vector<CMat> partial(chunks);

  par::parallel_for(chunks, [&](std::ptrdiff_t c) {
    Rng rng = base.substream(static_cast<std::uint64_t>(c));
    const std::int64_t lo = c * par::kMcChunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + par::kMcChunk, mc.samples);
    CMat acc = CMat::Zero(m, m);
    CVec zeta(m), white(m), zt(m);
    CMat qzt(m, m);
    for (std::int64_t i = lo; i < hi; ++i) {
      for (Eigen::Index k = 0; k < m; ++k) zeta[k] = rng.cnormal();
      const CVec mean = b_sqrt * zeta;
      for (Eigen::Index k = 0; k < m; ++k) white[k] = rng.cnormal();
      const CVec z = mean + cond_sqrt * white;
      const CVec y = channel.sample(z, rng);
      channel.posterior_moments(y, mean, cond_cov, &zt, &qzt, nullptr);
      acc.noalias() += zt * zt.adjoint();
    }
    partial[c] = std::move(acc);
  });

  CMat total = CMat::Zero(m, m);
  for (const auto& p : partial) total += p;
  return herm(total / static_cast<double>(mc.samples));
}

CMat single_vector_mmse(const RowPrior& prior, const CMat& noise_cov, const SEOptions& opt) {
  if (opt.gaussian_closed_prior) {
    if (const auto* g = dynamic_cast<const GaussianRowPrior*>(&prior)) {
      // (Sx^-1 + Qn^-1)^-1 = Sx (Sx + Qn)^-1 Qn, robust at Qn = 0.
      const CMat sum_inv = hermitian_inverse(g->sigma_x() + noise_cov);
      return herm(g->sigma_x() * sum_inv * noise_cov);
    }
  }
  return prior_mmse_mc(prior, noise_cov, opt.prior_mc);
}

SEState se_step(const RowPrior& prior, const RowChannel& channel, double alpha, const CMat& qx,
                const SEOptions& opt) {
  if (!(alpha > 0.0)) throw ConfigError("se_step: alpha must be positive");
  const Eigen::Index m = prior.dim();
  const CMat a = prior.mean_covariance();
  SEState next;

  const CMat* sw = channel.awgn_cov();
  if (opt.awgn_closed_channel && sw != nullptr) {
    next.qr = herm(*sw + qx / alpha);
  } else {
    // General channel stage: overlap b = a - qx, posterior second moment of
    // z, then qr = qx (alpha qx - alpha^2 qtz)^-1 qx with
    // qtz = a/alpha - second moment.
    const CMat b = herm(a - qx);
    const CMat second = channel_second_moment_mc(channel, a, b, alpha, opt.channel_mc);
    const CMat qtz = herm(a / alpha - second);
    const CMat inner = herm(alpha * qx - (alpha * alpha) * qtz);
    const CMat inner_inv = hermitian_inverse(inner, opt.jitter);
    next.qr = ensure_psd(qx * inner_inv * qx, opt.jitter);
  }
  next.qx = ensure_psd(single_vector_mmse(prior, next.qr, opt), opt.jitter);
  if (next.qx.rows() != m) throw NumericalError("se_step: dimension mismatch");
  return next;
}

SERun se_run(const RowPrior& prior, const RowChannel& channel, double alpha, const SEOptions& opt) {
  SERun run;
  SEState st;
  st.qx = prior.mean_covariance();
  st.qr = CMat::Zero(prior.dim(), prior.dim());
  st.iter = 0;
  run.trajectory.push_back(st);
  for (int t = 1; t <= opt.max_iters; ++t) {
    SEState next = se_step(prior, channel, alpha, st.qx, opt);
    next.iter = t;
    const double scale = std::max(next.qx.norm(), 1e-300);
    const double delta = (next.qx - st.qx).norm() / scale;
    st = next;
    run.trajectory.push_back(st);
    if (delta < opt.tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

ValueWithError expected_log_marginal(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc) {
  if (mc.samples < 1) throw ConfigError("expected_log_marginal: samples must be >= 1");
  const Eigen::Index m = prior.dim();
  const CMat noise_sqrt = hermitian_sqrt(herm(noise_cov));
  const auto den = prior.denoiser(herm(noise_cov));
  const std::ptrdiff_t chunks = par::chunk_count(mc.samples);
  const Rng base(mc.seed);
  std::vector<double> sum1(chunks, 0.0), sum2(chunks, 0.0);

  par::parallel_for(chunks, [&](std::ptrdiff_t c) {
    Rng rng = base.substream(static_cast<std::uint64_t>(c));
    const std::int64_t lo = c * par::kMcChunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + par::kMcChunk, mc.samples);
    double s1 = 0.0, s2 = 0.0;
    CVec w(m);
    for (std::int64_t i = lo; i < hi; ++i) {
      const CVec x = prior.sample(rng);
      for (Eigen::Index k = 0; k < m; ++k) w[k] = rng.cnormal();
      const double v = den->log_marginal(x + noise_sqrt * w);
      s1 += v;
      s2 += v * v;
    }
    sum1[c] = s1;
    sum2[c] = s2;
  });

  double s1 = 0.0, s2 = 0.0;
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    s1 += sum1[c];
    s2 += sum2[c];
  }
  const double n = static_cast<double>(mc.samples);
  ValueWithError out;
  out.value = s1 / n;
  const double var = std::max(s2 / n - out.value * out.value, 0.0);
  out.std_error = std::sqrt(var / n);
  return out;
}

ValueWithError single_vector_mutual_information(const RowPrior& prior, const CMat& b_tilde,
                                                const McOptions& mc, bool gaussian_closed) {
  const Eigen::Index m = prior.dim();
  if (gaussian_closed) {
    if (const auto* g = dynamic_cast<const GaussianRowPrior*>(&prior)) {
      ValueWithError out;
      out.value = log_det_pd(CMat::Identity(m, m) + b_tilde * g->sigma_x());
      out.std_error = 0.0;
      return out;
    }
  }
  // I(x;y) = -E_y log P(y) - M log pi + log det b_tilde - M.
  const CMat noise_cov = hermitian_inverse(b_tilde);
  const ValueWithError ely = expected_log_marginal(prior, noise_cov, mc);
  ValueWithError out;
  out.value = -ely.value - static_cast<double>(m) * std::log(M_PI) + log_det_pd(b_tilde) -
              static_cast<double>(m);
  out.std_error = ely.std_error;
  return out;
}

namespace {

// E_{zeta, y} log v(y; mean(zeta), cond_cov), the emission-entropy term of
// the free energy.
ValueWithError emission_log_term(const RowChannel& channel, const CMat& b, const CMat& cond_cov,
                                 double alpha, const McOptions& mc) {
  const Eigen::Index m = b.rows();
  const CMat b_sqrt = hermitian_sqrt(herm(b)) / std::sqrt(alpha);
  const CMat cond_sqrt = hermitian_sqrt(herm(cond_cov));
  const std::ptrdiff_t chunks = par::chunk_count(mc.samples);
  const Rng base(mc.seed);
  std::vector<double> sum1(chunks, 0.0), sum2(chunks, 0.0);

  par::parallel_for(chunks, [&](std::ptrdiff_t c) {
    Rng rng = base.substream(static_cast<std::uint64_t>(c));
    const std::int64_t lo = c * par::kMcChunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + par::kMcChunk, mc.samples);
    double s1 = 0.0, s2 = 0.0;
    CVec zeta(m), white(m);
    for (std::int64_t i = lo; i < hi; ++i) {
      for (Eigen::Index k = 0; k < m; ++k) zeta[k] = rng.cnormal();
      const CVec mean = b_sqrt * zeta;
      for (Eigen::Index k = 0; k < m; ++k) white[k] = rng.cnormal();
      const CVec z = mean + cond_sqrt * white;
      const CVec y = channel.sample(z, rng);
      const double v = channel.log_emission(y, mean, cond_cov);
      s1 += v;
      s2 += v * v;
    }
    sum1[c] = s1;
    sum2[c] = s2;
  });

  double s1 = 0.0, s2 = 0.0;
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    s1 += sum1[c];
    s2 += sum2[c];
  }
  const double n = static_cast<double>(mc.samples);
  ValueWithError out;
  out.value = s1 / n;
  const double var = std::max(s2 / n - out.value * out.value, 0.0);
  out.std_error = std::sqrt(var / n);
  return out;
}

}  // namespace

ValueWithError free_energy(const RowPrior& prior, const RowChannel& channel, double alpha,
                           const CMat& b, const CMat& b_tilde, const McOptions& mc) {
  const Eigen::Index m = prior.dim();
  const CMat a = prior.mean_covariance();
  const CMat mmse = herm(a - b);
  const CMat noise_cov = hermitian_inverse(b_tilde);

  McOptions mc_inner = mc;
  const ValueWithError ely = expected_log_marginal(prior, noise_cov, mc_inner);
  const double ixy = -ely.value - static_cast<double>(m) * std::log(M_PI) + log_det_pd(b_tilde) -
                     static_cast<double>(m);

  mc_inner.seed = mix_seed(mc.seed ^ 0x5eed);
  const CMat cond_cov = herm(mmse / alpha);
  const ValueWithError vterm = emission_log_term(channel, b, cond_cov, alpha, mc_inner);

  ValueWithError out;
  out.value = ixy - (mmse * b_tilde).trace().real() - alpha * vterm.value;
  out.std_error = std::sqrt(ely.std_error * ely.std_error +
                            alpha * alpha * vterm.std_error * vterm.std_error);
  return out;
}

namespace {

struct Branch {
  CMat qx;
  int iterations = 0;
  bool converged = false;
};

Branch run_branch(const RowPrior& prior, const RowChannel& channel, double alpha, CMat qx0,
                  const ReplicaOptions& opt) {
  Branch br;
  CMat qx = std::move(qx0);
  for (int t = 1; t <= opt.max_iters; ++t) {
    const SEState next = se_step(prior, channel, alpha, qx, opt.se);
    const CMat updated = opt.damping * next.qx + (1.0 - opt.damping) * qx;
    const double scale = std::max(updated.norm(), 1e-300);
    const double delta = (updated - qx).norm() / scale;
    qx = updated;
    br.iterations = t;
    if (delta < opt.tol) {
      br.converged = true;
      break;
    }
  }
  br.qx = qx;
  return br;
}

}  // namespace

ReplicaSolution replica_fixed_point(const RowPrior& prior, const RowChannel& channel, double alpha,
                                    const ReplicaOptions& opt) {
  const CMat a = prior.mean_covariance();
  const Eigen::Index m = a.rows();

  // Zero-overlap start (qx = a) and near-full-overlap start.
  Branch b0 = run_branch(prior, channel, alpha, a, opt);
  Branch b1 = run_branch(prior, channel, alpha, CMat(1e-3 * a), opt);

  const double scale = std::max(a.norm(), 1e-300);
  const bool same = (b0.qx - b1.qx).norm() / scale < 50.0 * opt.tol;

  auto finish = [&](const CMat& qx, int branch_id, int iters, bool conv, int nbranch) {
    ReplicaSolution sol;
    sol.a = a;
    sol.mmse = herm(qx);
    sol.b = herm(a - qx);
    const SEState fp = se_step(prior, channel, alpha, qx, opt.se);
    sol.b_tilde = hermitian_inverse(fp.qr, opt.se.jitter);
    const double fp_scale = std::max(qx.norm(), 1e-300);
    sol.residual = (fp.qx - qx).norm() / fp_scale;
    sol.free_energy = free_energy(prior, channel, alpha, sol.b, sol.b_tilde, opt.free_energy_mc);
    sol.iterations = iters;
    sol.converged = conv;
    sol.branch = branch_id;
    sol.branches_found = nbranch;
    double mi = 0.0;
    mi = std::max(mi, sol.a.imag().cwiseAbs().maxCoeff());
    mi = std::max(mi, sol.b.imag().cwiseAbs().maxCoeff());
    mi = std::max(mi, sol.b_tilde.imag().cwiseAbs().maxCoeff());
    sol.max_imag = mi;
    return sol;
  };

  if (same) {
    return finish(b0.qx, 0, b0.iterations, b0.converged, 1);
  }
  ReplicaSolution s0 = finish(b0.qx, 0, b0.iterations, b0.converged, 2);
  ReplicaSolution s1 = finish(b1.qx, 1, b1.iterations, b1.converged, 2);
  return s0.free_energy.value <= s1.free_energy.value ? s0 : s1;
}

ValueWithError mutual_information(const RowPrior& prior, const RowChannel& channel, int l, int n,
                                  const ReplicaSolution& sol, const McOptions& mc) {
  if (l < 1 || n < 1) throw ConfigError("mutual_information: L and N must be >= 1");
  const Eigen::Index m = prior.dim();
  if (const CMat* sw = channel.awgn_cov()) {
    // Per-measurement correction in closed form.
    const ValueWithError ixy = single_vector_mutual_information(prior, sol.b_tilde, mc, true);
    const CMat bs = sol.b_tilde * (*sw);
    const double corr = bs.trace().real() - log_det_pd(bs) - static_cast<double>(m);
    ValueWithError out;
    out.value = n * ixy.value + l * corr;
    out.std_error = n * ixy.std_error;
    return out;
  }
  const double h_cond = channel.conditional_entropy_per_row();
  const ValueWithError f = free_energy(prior, channel, static_cast<double>(l) / n, sol.b, sol.b_tilde, mc);
  ValueWithError out;
  out.value = n * f.value - l * h_cond;
  out.std_error = n * f.std_error;
  return out;
}

}  // namespace rowamp
