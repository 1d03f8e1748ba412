#include "rowamp/reference.hpp"

#include <algorithm>

#include "rowamp/parallel.hpp"

namespace rowamp::ref {

void ep_iteration_serial(const Problem& problem, const ProblemInstance& inst, const SolverOptions& opt,
                         EPState* st, EPDiagnostics* diag) {
  const int l = problem.config.l;
  const int n = problem.config.n;
  const int m = problem.config.m;
  const double theta = opt.damping;
  const bool diag_mode = opt.diagonal || problem.channel->diagonal_only();

  for (int li = 0; li < l; ++li) {
    CMat qz = CMat::Zero(m, m);
    CVec z0 = CVec::Zero(m);
    for (int ni = 0; ni < n; ++ni) {
      qz += st->g(li, ni) * st->qx[ni];
      z0 += inst.h(li, ni) * st->xhat.row(ni).transpose();
    }
    if (diag_mode) qz = diagonal_restriction(qz);
    if (!(qz.trace().real() > 0.0)) {
      st->s.row(li) *= (1.0 - theta);
      st->qs[li] = CMat::Zero(m, m);
      continue;
    }
    const CVec z = z0 - qz * st->s.row(li).transpose();
    CVec zt(m);
    CMat qzt(m, m);
    bool uf = false;
    problem.channel->posterior_moments(inst.y.row(li).transpose(), z, qz, &zt, &qzt, &uf);
    if (uf && diag) ++diag->underflow_rows;
    if (diag_mode) qzt = diagonal_restriction(qzt);
    const CMat qz_inv = hermitian_inverse(qz, opt.jitter);
    bool clipped = false;
    CMat qs = clip_psd(qz_inv * (qz - qzt) * qz_inv, &clipped);
    if (clipped && diag) ++diag->psd_clips;
    if (diag_mode) qs = diagonal_restriction(qs);
    const CVec s_new = qz_inv * (zt - z);
    st->s.row(li) = (theta * s_new + (1.0 - theta) * CVec(st->s.row(li).transpose())).transpose();
    st->qs[li] = qs;
  }

  for (int ni = 0; ni < n; ++ni) {
    CMat den = CMat::Zero(m, m);
    CVec u = CVec::Zero(m);
    for (int li = 0; li < l; ++li) {
      den += st->g(li, ni) * st->qs[li];
      u += std::conj(inst.h(li, ni)) * st->s.row(li).transpose();
    }
    if (diag_mode) den = diagonal_restriction(den);
    CVec xh(m);
    CMat qh(m, m);
    if (!(den.trace().real() > 0.0)) {
      xh = CVec::Zero(m);
      qh = problem.prior->mean_covariance();
    } else {
      const CMat qr = hermitian_inverse(den, opt.jitter);
      const CVec r = st->xhat.row(ni).transpose() + qr * u;
      problem.prior->posterior_moments(r, qr, &xh, &qh);
      qh = ensure_psd(qh, opt.jitter);
    }
    if (diag_mode) qh = diagonal_restriction(qh);
    const CMat prev = diag_mode ? CMat(diagonal_restriction(st->qx[ni])) : st->qx[ni];
    st->xhat.row(ni) = xh.transpose();
    st->qx[ni] = theta * qh + (1.0 - theta) * prev;
  }

  ++st->iter;
}

CMat prior_mmse_mc_serial(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc) {
  // Same chunk layout and substreams as the parallel estimator, summed in
  // chunk order on one thread.
  const Eigen::Index m = prior.dim();
  const CMat noise_sqrt = hermitian_sqrt(herm(noise_cov));
  const auto den = prior.denoiser(herm(noise_cov));
  const std::int64_t draws = mc.antithetic ? (mc.samples + 1) / 2 : mc.samples;
  const std::ptrdiff_t chunks = par::chunk_count(draws);
  const Rng base(mc.seed);
  CMat total = CMat::Zero(m, m);
  std::int64_t count = 0;
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    Rng rng = base.substream(static_cast<std::uint64_t>(c));
    const std::int64_t lo = c * par::kMcChunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + par::kMcChunk, draws);
    CMat acc = CMat::Zero(m, m);
    CVec xhat(m);
    CMat qhat(m, m);
    for (std::int64_t i = lo; i < hi; ++i) {
      const CVec x = prior.sample(rng);
      CVec w(m);
      for (Eigen::Index k = 0; k < m; ++k) w[k] = rng.cnormal();
      const CVec nvec = noise_sqrt * w;
      for (int half = 0; half < (mc.antithetic ? 2 : 1); ++half) {
        const CVec y = half == 0 ? CVec(x + nvec) : CVec(x - nvec);
        den->moments(y, &xhat, &qhat);
        acc += qhat;
        ++count;
      }
    }
    total += acc;
  }
  return herm(total / static_cast<double>(count));
}

}  // namespace rowamp::ref
