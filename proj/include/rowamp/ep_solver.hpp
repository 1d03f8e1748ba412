#pragma once

#include <vector>

#include "rowamp/model.hpp"
#include "rowamp/types.hpp"

namespace rowamp {

struct SolverOptions {
  int max_iters = 50;
  double damping = 0.7;  // new <- damping*new + (1-damping)*old on (s, Qx)
  double tol = 1e-8;     // relative Frobenius change of xhat between iterations
  double jitter = 1e-9;  // relative jitter for inversions and ensure_psd
  bool diagonal = false;  // restrict every covariance to its diagonal
  bool record_trajectory = true;
};

struct EPState {
  CMat xhat;             // N x M row estimates
  std::vector<CMat> qx;  // per-row posterior covariance
  CMat s;                // L x M extrinsic means
  std::vector<CMat> qs;  // per-row extrinsic precisions
  int iter = 0;
  RMat g;                // |h|^2 cached from the instance
  CMat gc;               // same, complex-typed for mixed products
};

struct EPDiagnostics {
  long psd_clips = 0;       // extrinsic precisions clipped to PSD
  long underflow_rows = 0;  // channel rows that hit the underflow fallback
};

struct IterationRecord {
  int iter = 0;
  double nmse_db = 0.0;  // NaN when no ground truth was supplied
  double mean_trace_qx = 0.0;
  double seconds = 0.0;  // wall time since the start of the run
};

struct EPResult {
  CMat xhat;
  std::vector<CMat> qx;
  std::vector<IterationRecord> trajectory;
  int iterations = 0;
  bool converged = false;
  EPDiagnostics diag;
};

CMat diagonal_restriction(const CMat& a);

EPState ep_init(const Problem& problem, const ProblemInstance& inst);

// One sweep of the message-passing updates over all rows.
void ep_iteration(const Problem& problem, const ProblemInstance& inst, const SolverOptions& opt,
                  EPState* st, EPDiagnostics* diag);

// Full run with convergence on the relative change of xhat.  truth enables
// the per-iteration NMSE column of the trajectory.
EPResult ep_run(const Problem& problem, const ProblemInstance& inst, const SolverOptions& opt,
                const CMat* truth = nullptr);

}  // namespace rowamp
