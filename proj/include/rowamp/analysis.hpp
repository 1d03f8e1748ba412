#pragma once

#include <vector>

#include "rowamp/channels.hpp"
#include "rowamp/priors.hpp"
#include "rowamp/types.hpp"

namespace rowamp {

struct ValueWithError {
  double value = 0.0;
  double std_error = 0.0;
};

struct SEOptions {
  McOptions prior_mc{20000, 1234, true};
  McOptions channel_mc{40000, 4321, false};
  // Closed-form shortcuts, used when the channel/prior admits them.
  bool awgn_closed_channel = true;
  bool gaussian_closed_prior = true;
  int max_iters = 200;
  double tol = 1e-10;  // relative Frobenius change of the error covariance
  double jitter = 1e-9;
};

struct SEState {
  CMat qx;  // tracked error covariance of the row estimates
  CMat qr;  // pseudo-channel noise covariance feeding the prior
  int iter = 0;
};

// One update of the deterministic trajectory: channel stage (Monte-Carlo
// integrals or the AWGN reduction qr = Sw + qx/alpha), then the prior-side
// MMSE at that pseudo-noise level.
SEState se_step(const RowPrior& prior, const RowChannel& channel, double alpha, const CMat& qx,
                const SEOptions& opt);

struct SERun {
  std::vector<SEState> trajectory;
  bool converged = false;
};

SERun se_run(const RowPrior& prior, const RowChannel& channel, double alpha, const SEOptions& opt);

// Monte-Carlo estimate of E{E[z|y] E[z|y]^H} with z drawn through the
// Gaussian mixing of a rank-b overlap: zeta ~ CN(0, I), z ~ N_c(b_sqrt zeta
// / sqrt(alpha), (a - b)/alpha), y ~ P(y|z).
CMat channel_second_moment_mc(const RowChannel& channel, const CMat& a, const CMat& b, double alpha,
                              const McOptions& mc);

// MMSE matrix of a single row observed as y = x + n, n ~ N_c(0, noise_cov).
CMat single_vector_mmse(const RowPrior& prior, const CMat& noise_cov, const SEOptions& opt);

struct ReplicaOptions {
  SEOptions se;
  double damping = 0.5;
  int max_iters = 1000;
  double tol = 1e-8;
  McOptions free_energy_mc{20000, 99, false};
};

struct ReplicaSolution {
  CMat a;        // prior row covariance
  CMat b;        // overlap matrix
  CMat b_tilde;  // fixed-point precision (inverse pseudo-noise)
  CMat mmse;     // a - b
  ValueWithError free_energy;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // relative fixed-point residual
  double max_imag = 0.0;  // largest imaginary part across the blocks
  int branch = 0;         // which initialization won the free-energy pick
  int branches_found = 1;
};

// Damped Picard iteration of the coupled moment equations from two
// initializations (zero overlap and near-full overlap); when they disagree
// the branch with the smaller free energy wins.
ReplicaSolution replica_fixed_point(const RowPrior& prior, const RowChannel& channel, double alpha,
                                    const ReplicaOptions& opt);

// Free-energy functional of a candidate fixed point.
ValueWithError free_energy(const RowPrior& prior, const RowChannel& channel, double alpha,
                           const CMat& b, const CMat& b_tilde, const McOptions& mc);

// E_y log P(y) for the single-row channel y = x + n, n ~ N_c(0, noise_cov).
ValueWithError expected_log_marginal(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc);

// I(x; y) of the single-row pseudo-channel at precision b_tilde, in nats.
ValueWithError single_vector_mutual_information(const RowPrior& prior, const CMat& b_tilde,
                                                const McOptions& mc, bool gaussian_closed = true);

// I(X; Y | H) for the full system, in nats.  AWGN uses the closed
// per-measurement correction; other channels need a closed conditional
// entropy and throw UnsupportedError otherwise.
ValueWithError mutual_information(const RowPrior& prior, const RowChannel& channel, int l, int n,
                                  const ReplicaSolution& sol, const McOptions& mc);

}  // namespace rowamp
