// Timing comparison of the batched/parallel kernels against the serial
// reference implementations.  Not a correctness test; run manually.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "rowamp/ep_solver.hpp"
#include "rowamp/model.hpp"
#include "rowamp/parallel.hpp"
#include "rowamp/priors.hpp"
#include "rowamp/reference.hpp"

using namespace rowamp;

namespace {

double time_of(int reps, const std::function<void()>& body) {
  body();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) body();
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return total / reps;
}

void report(const std::string& name, double serial, double parallel) {
  std::printf("%-34s %10.3f ms %10.3f ms %8.2fx\n", name.c_str(), serial * 1e3, parallel * 1e3,
              serial / parallel);
}

SystemConfig make_config(int l, int n, int m) {
  SystemConfig sc;
  sc.l = l;
  sc.n = n;
  sc.m = m;
  sc.seed = 11;
  sc.prior.type = "bernoulli-gaussian";
  sc.prior.rho = 0.1;
  sc.prior.covariance.kind = "uniform-outer";
  sc.prior.covariance.trace = static_cast<double>(m);
  sc.channel.type = "awgn";
  sc.channel.covariance.kind = "uniform-outer";
  sc.channel.snr_db = 10.0;
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  int l = 256, n = 512, m = 4, reps = 5;
  if (argc > 1) l = std::stoi(argv[1]);
  if (argc > 2) n = std::stoi(argv[2]);
  if (argc > 3) m = std::stoi(argv[3]);
  if (argc > 4) reps = std::stoi(argv[4]);

  const SystemConfig sc = make_config(l, n, m);
  const Problem prob = realize(sc);
  const ProblemInstance inst = generate_instance(prob, 1);
  const SolverOptions opt;

  std::printf("L=%d N=%d M=%d threads=%d reps=%d\n", l, n, m, par::max_threads(), reps);
  std::printf("%-34s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  {
    EPState ss = ep_init(prob, inst);
    EPState ps = ep_init(prob, inst);
    EPDiagnostics d;
    const double ts = time_of(reps, [&] { ref::ep_iteration_serial(prob, inst, opt, &ss, &d); });
    const double tp = time_of(reps, [&] { ep_iteration(prob, inst, opt, &ps, &d); });
    report("ep_iteration", ts, tp);
  }
  {
    McOptions mc;
    mc.samples = 50000;
    const CMat qr = 0.1 * CMat::Identity(m, m);
    const double ts = time_of(reps, [&] { ref::prior_mmse_mc_serial(*prob.prior, qr, mc); });
    const double tp = time_of(reps, [&] { prior_mmse_mc(*prob.prior, qr, mc); });
    report("prior_mmse_mc", ts, tp);
  }
  return 0;
}
