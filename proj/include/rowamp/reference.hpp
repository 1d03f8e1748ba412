#pragma once

#include "rowamp/ep_solver.hpp"
#include "rowamp/priors.hpp"

namespace rowamp::ref {

// Plain serial implementations of the hot kernels, kept as the behavioural
// baseline for the parallel versions.  Same update rules, straightforward
// per-row loops, no batched products.

void ep_iteration_serial(const Problem& problem, const ProblemInstance& inst, const SolverOptions& opt,
                         EPState* st, EPDiagnostics* diag);

CMat prior_mmse_mc_serial(const RowPrior& prior, const CMat& noise_cov, const McOptions& mc);

}  // namespace rowamp::ref
