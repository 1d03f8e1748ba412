#include "rowamp/ep_solver.hpp"

#include <atomic>
#include <chrono>
#include <cmath>

#include "rowamp/parallel.hpp"

namespace rowamp {

CMat diagonal_restriction(const CMat& a) {
  return a.diagonal().asDiagonal();
}

EPState ep_init(const Problem& problem, const ProblemInstance& inst) {
  const int l = problem.config.l;
  const int n = problem.config.n;
  const int m = problem.config.m;
  if (inst.h.rows() != l || inst.h.cols() != n || inst.y.rows() != l || inst.y.cols() != m) {
    throw ConfigError("ep_init: instance shapes disagree with the config");
  }
  EPState st;
  st.xhat = CMat::Zero(n, m);
  st.qx.assign(n, problem.prior->mean_covariance());
  st.s = CMat::Zero(l, m);
  st.qs.assign(l, CMat::Zero(m, m));
  st.iter = 0;
  st.g = inst.h.cwiseAbs2();
  st.gc = st.g.cast<cplx>();
  return st;
}

namespace {

// Flatten per-row M x M covariances into rows of an (rows x M^2) matrix so
// the weighted sums over rows become one matrix product.
CMat flatten(const std::vector<CMat>& mats, int m) {
  CMat out(static_cast<Eigen::Index>(mats.size()), m * m);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const CVec>(mats[i].data(), m * m).transpose();
  }
  return out;
}

CMat unflatten_row(const CMat& flat, Eigen::Index row, int m) {
  CMat out(m, m);
  Eigen::Map<CVec>(out.data(), m * m) = flat.row(row).transpose();
  return out;
}

}  // namespace

void ep_iteration(const Problem& problem, const ProblemInstance& inst, const SolverOptions& opt,
                  EPState* st, EPDiagnostics* diag) {
  const int l = problem.config.l;
  const int n = problem.config.n;
  const int m = problem.config.m;
  const double theta = opt.damping;
  const bool diag_mode = opt.diagonal || problem.channel->diagonal_only();

  // Weighted covariance sums for the measurement side.
  const CMat qxf = flatten(st->qx, m);
  const CMat qzf = st->gc * qxf;  // row l holds sum_n |h_ln|^2 Qx_n
  const CMat z0m = inst.h * st->xhat;

  std::atomic<long> clips{0};
  std::atomic<long> underflows{0};

  // Measurement-side sweep: channel posterior, extrinsic precision and mean.
  par::parallel_for(l, [&](std::ptrdiff_t li) {
    CMat qz = unflatten_row(qzf, li, m);
    if (diag_mode) qz = diagonal_restriction(qz);
    if (!(qz.trace().real() > 0.0)) {
      // Degenerate cavity (all row covariances vanished): no information
      // flows through this measurement.
      st->s.row(li) *= (1.0 - theta);
      st->qs[li] = CMat::Zero(m, m);
      return;
    }
    const CVec z = z0m.row(li).transpose() - qz * st->s.row(li).transpose();
    CVec zt(m);
    CMat qzt(m, m);
    bool uf = false;
    problem.channel->posterior_moments(inst.y.row(li).transpose(), z, qz, &zt, &qzt, &uf);
    if (uf) underflows.fetch_add(1, std::memory_order_relaxed);
    if (diag_mode) qzt = diagonal_restriction(qzt);
    const CMat qz_inv = hermitian_inverse(qz, opt.jitter);
    bool clipped = false;
    CMat qs = clip_psd(qz_inv * (qz - qzt) * qz_inv, &clipped);
    if (clipped) clips.fetch_add(1, std::memory_order_relaxed);
    if (diag_mode) qs = diagonal_restriction(qs);
    const CVec s_new = qz_inv * (zt - z);
    st->s.row(li) = (theta * s_new + (1.0 - theta) * CVec(st->s.row(li).transpose())).transpose();
    st->qs[li] = qs;
  });

  // Weighted sums back on the signal side.
  const CMat qsf = flatten(st->qs, m);
  const CMat denf = st->gc.transpose() * qsf;  // row n holds sum_l |h_ln|^2 Qs_l
  const CMat um = inst.h.adjoint() * st->s;

  par::parallel_for(n, [&](std::ptrdiff_t ni) {
    CMat den = unflatten_row(denf, ni, m);
    if (diag_mode) den = diagonal_restriction(den);
    CVec xh(m);
    CMat qh(m, m);
    if (!(den.trace().real() > 0.0)) {
      // Infinite pseudo-noise: the posterior falls back to the prior.
      xh = CVec::Zero(m);
      qh = problem.prior->mean_covariance();
    } else {
      const CMat qr = hermitian_inverse(den, opt.jitter);
      const CVec r = st->xhat.row(ni).transpose() + qr * um.row(ni).transpose();
      problem.prior->posterior_moments(r, qr, &xh, &qh);
      qh = ensure_psd(qh, opt.jitter);
    }
    if (diag_mode) qh = diagonal_restriction(qh);
    const CMat prev = diag_mode ? CMat(diagonal_restriction(st->qx[ni])) : st->qx[ni];
    st->xhat.row(ni) = xh.transpose();
    st->qx[ni] = theta * qh + (1.0 - theta) * prev;
  });

  ++st->iter;
  if (diag) {
    diag->psd_clips += clips.load();
    diag->underflow_rows += underflows.load();
  }
}

EPResult ep_run(const Problem& problem, const ProblemInstance& inst, const SolverOptions& opt,
                const CMat* truth) {
  EPState st = ep_init(problem, inst);
  EPResult res;
  const auto start = std::chrono::steady_clock::now();
  const double truth_norm2 = truth ? truth->squaredNorm() : 0.0;
  for (int t = 1; t <= opt.max_iters; ++t) {
    const CMat prev = st.xhat;
    ep_iteration(problem, inst, opt, &st, &res.diag);
    const double nn = st.xhat.norm();
    const double delta = nn > 0.0 ? (st.xhat - prev).norm() / nn : (st.xhat - prev).norm();
    if (opt.record_trajectory) {
      IterationRecord rec;
      rec.iter = t;
      rec.nmse_db = (truth && truth_norm2 > 0.0)
                        ? to_db((st.xhat - *truth).squaredNorm() / truth_norm2)
                        : std::numeric_limits<double>::quiet_NaN();
      double tr = 0.0;
      for (const auto& q : st.qx) tr += q.trace().real();
      rec.mean_trace_qx = tr / static_cast<double>(st.qx.size());
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      res.trajectory.push_back(rec);
    }
    res.iterations = t;
    if (delta < opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.xhat = std::move(st.xhat);
  res.qx = std::move(st.qx);
  return res;
}

}  // namespace rowamp
