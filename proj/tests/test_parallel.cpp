#include <doctest.h>

#include <cstdlib>
#include <string>
#include <vector>

#include "rowamp/ep_solver.hpp"
#include "rowamp/model.hpp"
#include "rowamp/parallel.hpp"
#include "rowamp/reference.hpp"

using namespace rowamp;

namespace {

SystemConfig small_system(const char* channel_type, int bits) {
  SystemConfig sc;
  sc.l = 32;
  sc.n = 16;
  sc.m = 2;
  sc.seed = 21;
  sc.prior.type = "bernoulli-gaussian";
  sc.prior.rho = 0.3;
  sc.prior.covariance.kind = "uniform-outer-plus-2I";
  sc.prior.covariance.trace = 2.0;
  sc.channel.type = channel_type;
  sc.channel.snr_db = 10.0;
  sc.channel.bits = bits;
  return sc;
}

double state_distance(const EPState& a, const EPState& b) {
  double d = (a.xhat - b.xhat).norm() + (a.s - b.s).norm();
  for (std::size_t i = 0; i < a.qx.size(); ++i) d += (a.qx[i] - b.qx[i]).norm();
  for (std::size_t i = 0; i < a.qs.size(); ++i) d += (a.qs[i] - b.qs[i]).norm();
  return d;
}

double state_scale(const EPState& a) {
  double s = a.xhat.norm() + a.s.norm() + 1.0;
  for (const auto& q : a.qx) s += q.norm();
  return s;
}

}  // namespace

TEST_CASE("parallel loop visits every index exactly once") {
  std::vector<int> hits(101, 0);
  par::parallel_for(101, [&](std::ptrdiff_t i) { ++hits[i]; });
  for (const int h : hits) CHECK(h == 1);

  int calls = 0;
  par::parallel_for(0, [&](std::ptrdiff_t) { ++calls; });
  CHECK(calls == 0);
}

TEST_CASE("thread count resolution order") {
  const char* saved = std::getenv("ROWAMP_THREADS");
  const std::string saved_val = saved ? saved : "";
  unsetenv("ROWAMP_THREADS");

  par::set_threads(2);
  CHECK(par::max_threads() == 2);

  setenv("ROWAMP_THREADS", "3", 1);
  CHECK(par::max_threads() == 3);  // env var outranks set_threads

  unsetenv("ROWAMP_THREADS");
  par::set_threads(0);
  CHECK(par::max_threads() >= 1);

  if (saved) setenv("ROWAMP_THREADS", saved_val.c_str(), 1);
}

TEST_CASE("message passing sweeps match the serial reference") {
  for (const bool quantized : {false, true}) {
    const SystemConfig sc = small_system(quantized ? "quantized" : "awgn", 2);
    const Problem prob = realize(sc);
    const ProblemInstance inst = generate_instance(prob, 3);
    SolverOptions opt;

    EPState par_st = ep_init(prob, inst);
    EPState ser_st = ep_init(prob, inst);
    EPDiagnostics par_diag, ser_diag;
    for (int it = 0; it < 5; ++it) {
      ep_iteration(prob, inst, opt, &par_st, &par_diag);
      ref::ep_iteration_serial(prob, inst, opt, &ser_st, &ser_diag);
      CHECK(state_distance(par_st, ser_st) / state_scale(ser_st) < 1e-12);
    }
    CHECK(par_st.iter == ser_st.iter);
  }
}

TEST_CASE("diagonal sweeps match the serial reference") {
  const SystemConfig sc = small_system("awgn", 12);
  const Problem prob = realize(sc);
  const ProblemInstance inst = generate_instance(prob, 5);
  SolverOptions opt;
  opt.diagonal = true;

  EPState par_st = ep_init(prob, inst);
  EPState ser_st = ep_init(prob, inst);
  for (int it = 0; it < 3; ++it) {
    ep_iteration(prob, inst, opt, &par_st, nullptr);
    ref::ep_iteration_serial(prob, inst, opt, &ser_st, nullptr);
    CHECK(state_distance(par_st, ser_st) / state_scale(ser_st) < 1e-12);
  }
}

TEST_CASE("Monte Carlo reduction reproduces the serial chunk order bitwise") {
  const BernoulliGaussianRowPrior prior(0.4, 2.0 * CMat::Identity(2, 2));
  CMat noise = CMat::Identity(2, 2);
  noise(0, 1) = noise(1, 0) = 0.3;
  noise *= 0.5;

  McOptions mc;
  mc.samples = 1300;  // spans three partial chunks
  mc.seed = 17;
  for (const bool anti : {true, false}) {
    mc.antithetic = anti;
    const CMat a = prior_mmse_mc(prior, noise, mc);
    const CMat b = ref::prior_mmse_mc_serial(prior, noise, mc);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const SystemConfig sc = small_system("awgn", 12);
  const Problem prob = realize(sc);
  const ProblemInstance inst = generate_instance(prob, 9);
  SolverOptions opt;
  const BernoulliGaussianRowPrior prior(0.25, CMat::Identity(2, 2));
  const CMat noise = 0.2 * CMat::Identity(2, 2);
  McOptions mc;
  mc.samples = 4096;
  mc.seed = 33;

  par::set_threads(1);
  EPState st1 = ep_init(prob, inst);
  for (int it = 0; it < 3; ++it) ep_iteration(prob, inst, opt, &st1, nullptr);
  const CMat mc1 = prior_mmse_mc(prior, noise, mc);

  par::set_threads(4);
  EPState st4 = ep_init(prob, inst);
  for (int it = 0; it < 3; ++it) ep_iteration(prob, inst, opt, &st4, nullptr);
  const CMat mc4 = prior_mmse_mc(prior, noise, mc);
  par::set_threads(0);

  CHECK((st1.xhat - st4.xhat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((st1.s - st4.s).cwiseAbs().maxCoeff() == 0.0);
  CHECK((mc1 - mc4).cwiseAbs().maxCoeff() == 0.0);
}
