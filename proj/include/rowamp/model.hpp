#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>

#include "rowamp/channels.hpp"
#include "rowamp/priors.hpp"
#include "rowamp/rng.hpp"
#include "rowamp/types.hpp"

namespace rowamp {

// Covariance shape descriptor.  Kinds:
//   uniform-outer          A A^H scaled to trace, A with U[0,1) entries
//   uniform-outer-plus-2I  (A A^H + 2 I) scaled to trace
//   scaled-identity        (trace/M) I
//   ones-plus-I            (I + 1 1^T) scaled to trace
struct CovSpec {
  std::string kind = "scaled-identity";
  double trace = 1.0;
};

struct PriorSpec {
  std::string type = "bernoulli-gaussian";  // or "gaussian"
  double rho = 0.1;
  CovSpec covariance;
};

struct ChannelSpec {
  std::string type = "awgn";  // or "quantized"
  CovSpec covariance;         // awgn noise shape; trace ignored when snr_db set
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  int bits = 12;              // quantized only
  double noise_var = std::numeric_limits<double>::quiet_NaN();  // quantized; derived from snr_db when NaN
};

struct SystemConfig {
  int l = 0;
  int n = 0;
  int m = 0;
  std::uint64_t seed = 0;
  PriorSpec prior;
  ChannelSpec channel;

  double alpha() const { return static_cast<double>(l) / static_cast<double>(n); }
};

CMat make_covariance(const std::string& kind, int m, double trace, Rng& rng);

// The noise trace that puts rho tr(Sx) / (alpha tr(Sw)) at the target SNR.
double noise_trace_for_snr(double snr_db, double signal_trace, double alpha);

// A realized system: concrete covariance draws plus prior/channel objects.
// Covariances are drawn from substreams of config.seed, so equal configs
// realize identically.
struct Problem {
  SystemConfig config;
  std::shared_ptr<const RowPrior> prior;
  std::shared_ptr<const RowChannel> channel;
  CMat sigma_x;  // slab covariance of the prior
  CMat sigma_w;  // noise covariance seen by the channel
};

Problem realize(const SystemConfig& config);

struct ProblemInstance {
  SystemConfig config;
  CMat h;  // L x N, IID CN(0, 1/L)
  CMat x;  // N x M, rows drawn from the prior
  CMat z;  // L x M, H X
  CMat w;  // L x M additive noise; empty when unavailable
  CMat y;  // L x M channel output
  bool has_w() const { return w.size() > 0; }
};

ProblemInstance generate_instance(const Problem& problem, std::uint64_t seed);
ProblemInstance generate_instance(const SystemConfig& config);

struct ResultMetrics {
  double nmse = std::numeric_limits<double>::quiet_NaN();
  double nmse_db = std::numeric_limits<double>::quiet_NaN();
  double snr_db = std::numeric_limits<double>::quiet_NaN();
};

// |xhat - x|_F^2 / |x|_F^2; throws UndefinedMetricError when x is zero.
ResultMetrics nmse(const CMat& xhat, const CMat& x);

// |H X|_F^2 / |W|_F^2 in dB; requires the stored noise realization.
double empirical_snr(const ProblemInstance& inst);

// Binary container: magic + shape header + config JSON + row-major complex
// matrices as little-endian f64 pairs (see README).
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

std::string to_json_string(const SystemConfig& config);
SystemConfig system_config_from_json(const std::string& text);

// FNV-1a hash of the canonical config JSON, as fixed-width hex.
std::string config_digest(const SystemConfig& config);

}  // namespace rowamp
