#include "rowamp/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace rowamp {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "instance container assumes a little-endian host");

CMat make_covariance(const std::string& kind, int m, double trace, Rng& rng) {
  if (m < 1) throw ConfigError("make_covariance: dimension must be >= 1");
  if (!(trace > 0.0)) throw ConfigError("make_covariance: trace must be positive");
  if (kind == "scaled-identity") {
    return (trace / m) * CMat::Identity(m, m);
  }
  if (kind == "ones-plus-I") {
    const RMat s = RMat::Identity(m, m) + RMat::Ones(m, m);
    return (trace / s.trace()) * s.cast<cplx>();
  }
  if (kind == "uniform-outer" || kind == "uniform-outer-plus-2I") {
    RMat a(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) a(i, j) = rng.uniform();
    }
    RMat s = a * a.transpose();
    if (kind == "uniform-outer-plus-2I") s += 2.0 * RMat::Identity(m, m);
    const double tr = s.trace();
    if (!(tr > 1e-12)) throw NumericalError("make_covariance: degenerate draw");
    return (trace / tr) * s.cast<cplx>();
  }
  throw ConfigError("make_covariance: unknown kind '" + kind + "'");
}

double noise_trace_for_snr(double snr_db, double signal_trace, double alpha) {
  if (!(signal_trace > 0.0)) throw ConfigError("noise_trace_for_snr: signal trace must be positive");
  if (!(alpha > 0.0)) throw ConfigError("noise_trace_for_snr: alpha must be positive");
  return signal_trace * std::pow(10.0, -snr_db / 10.0) / alpha;
}

namespace {

constexpr std::uint64_t kCovXTag = 0xC0;
constexpr std::uint64_t kCovWTag = 0xC1;

void validate_shape(const SystemConfig& c) {
  if (c.l < 1 || c.n < 1 || c.m < 1) {
    throw ConfigError("SystemConfig: L, N, M must all be >= 1");
  }
}

}  // namespace

Problem realize(const SystemConfig& config) {
  validate_shape(config);
  Problem p;
  p.config = config;
  const Rng base(config.seed);

  Rng rng_x = base.substream(kCovXTag);
  p.sigma_x = make_covariance(config.prior.covariance.kind, config.m, config.prior.covariance.trace, rng_x);

  double rho = 1.0;
  if (config.prior.type == "gaussian") {
    p.prior = std::make_shared<GaussianRowPrior>(p.sigma_x);
  } else if (config.prior.type == "bernoulli-gaussian") {
    rho = config.prior.rho;
    p.prior = std::make_shared<BernoulliGaussianRowPrior>(rho, p.sigma_x);
  } else {
    throw ConfigError("SystemConfig: unknown prior type '" + config.prior.type + "'");
  }
  const double signal_trace = rho * p.sigma_x.trace().real();

  Rng rng_w = base.substream(kCovWTag);
  if (config.channel.type == "awgn") {
    const double target = std::isnan(config.channel.snr_db)
                              ? config.channel.covariance.trace
                              : noise_trace_for_snr(config.channel.snr_db, signal_trace, config.alpha());
    p.sigma_w = make_covariance(config.channel.covariance.kind, config.m, target, rng_w);
    p.channel = std::make_shared<AwgnRowChannel>(p.sigma_w);
  } else if (config.channel.type == "quantized") {
    double noise_var = config.channel.noise_var;
    if (std::isnan(noise_var)) {
      if (std::isnan(config.channel.snr_db)) {
        throw ConfigError("SystemConfig: quantized channel needs noise_var or snr_db");
      }
      noise_var = noise_trace_for_snr(config.channel.snr_db, signal_trace, config.alpha()) / config.m;
    }
    p.sigma_w = noise_var * CMat::Identity(config.m, config.m);
    // Clip at 3 standard deviations of one real dimension of z.
    const double e_z2 = signal_trace / (config.alpha() * config.m);
    const double clip = 3.0 * std::sqrt(std::max(e_z2, 1e-300) / 2.0);
    p.channel = std::make_shared<QuantizedRowChannel>(config.m, config.channel.bits, clip, noise_var);
  } else {
    throw ConfigError("SystemConfig: unknown channel type '" + config.channel.type + "'");
  }
  return p;
}

ProblemInstance generate_instance(const Problem& problem, std::uint64_t seed) {
  const SystemConfig& c = problem.config;
  ProblemInstance inst;
  inst.config = c;
  inst.config.seed = seed;
  const Rng base(seed);

  Rng rng_h = base.substream(0);
  inst.h.resize(c.l, c.n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(c.l));
  for (int l = 0; l < c.l; ++l) {
    for (int n = 0; n < c.n; ++n) inst.h(l, n) = scale * rng_h.cnormal();
  }

  Rng rng_x = base.substream(1);
  inst.x.resize(c.n, c.m);
  for (int n = 0; n < c.n; ++n) {
    inst.x.row(n) = problem.prior->sample(rng_x).transpose();
  }

  inst.z = inst.h * inst.x;

  Rng rng_w = base.substream(2);
  const CMat noise_sqrt = hermitian_sqrt(problem.channel->noise_cov());
  inst.w.resize(c.l, c.m);
  CVec white(c.m);
  for (int l = 0; l < c.l; ++l) {
    for (int m = 0; m < c.m; ++m) white[m] = rng_w.cnormal();
    inst.w.row(l) = (noise_sqrt * white).transpose();
  }

  inst.y.resize(c.l, c.m);
  for (int l = 0; l < c.l; ++l) {
    const CVec t = inst.z.row(l).transpose() + inst.w.row(l).transpose();
    inst.y.row(l) = problem.channel->output_map(t).transpose();
  }
  return inst;
}

ProblemInstance generate_instance(const SystemConfig& config) {
  return generate_instance(realize(config), config.seed);
}

ResultMetrics nmse(const CMat& xhat, const CMat& x) {
  if (xhat.rows() != x.rows() || xhat.cols() != x.cols()) {
    throw ConfigError("nmse: shape mismatch");
  }
  const double denom = x.squaredNorm();
  if (denom <= 0.0) throw UndefinedMetricError("nmse: reference signal is zero");
  ResultMetrics out;
  out.nmse = (xhat - x).squaredNorm() / denom;
  out.nmse_db = to_db(out.nmse);
  return out;
}

double empirical_snr(const ProblemInstance& inst) {
  if (!inst.has_w()) throw UndefinedMetricError("empirical_snr: noise realization unavailable");
  const double num = inst.z.squaredNorm();
  const double den = inst.w.squaredNorm();
  if (den <= 0.0) {
    if (num > 0.0) return kDbClamp;
    throw UndefinedMetricError("empirical_snr: zero signal and zero noise");
  }
  return to_db(num / den);
}

namespace {

json cov_to_json(const CovSpec& c) {
  return json{{"kind", c.kind}, {"trace", c.trace}};
}

CovSpec cov_from_json(const json& j) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (k != "kind" && k != "trace") throw ConfigError("covariance: unknown key '" + k + "'");
  }
  CovSpec c;
  c.kind = j.value("kind", c.kind);
  c.trace = j.value("trace", c.trace);
  return c;
}

}  // namespace

std::string to_json_string(const SystemConfig& config) {
  json prior{{"type", config.prior.type}, {"covariance", cov_to_json(config.prior.covariance)}};
  if (config.prior.type == "bernoulli-gaussian") prior["rho"] = config.prior.rho;
  json channel{{"type", config.channel.type}};
  if (config.channel.type == "awgn") {
    channel["covariance"] = cov_to_json(config.channel.covariance);
  } else {
    channel["bits"] = config.channel.bits;
    if (!std::isnan(config.channel.noise_var)) channel["noise_var"] = config.channel.noise_var;
  }
  if (!std::isnan(config.channel.snr_db)) channel["snr_db"] = config.channel.snr_db;
  json j{{"l", config.l}, {"n", config.n}, {"m", config.m}, {"seed", config.seed},
         {"prior", prior}, {"channel", channel}};
  return j.dump();
}

SystemConfig system_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("system config: ") + e.what());
  }
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (k != "l" && k != "n" && k != "m" && k != "seed" && k != "prior" && k != "channel") {
      throw ConfigError("system config: unknown key '" + k + "'");
    }
  }
  SystemConfig c;
  c.l = j.value("l", 0);
  c.n = j.value("n", 0);
  c.m = j.value("m", 0);
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("prior")) {
    const json& p = j["prior"];
    for (const auto& [k, v] : p.items()) {
      (void)v;
      if (k != "type" && k != "rho" && k != "covariance") throw ConfigError("prior: unknown key '" + k + "'");
    }
    c.prior.type = p.value("type", c.prior.type);
    c.prior.rho = p.value("rho", c.prior.rho);
    if (p.contains("covariance")) c.prior.covariance = cov_from_json(p["covariance"]);
  }
  if (j.contains("channel")) {
    const json& ch = j["channel"];
    for (const auto& [k, v] : ch.items()) {
      (void)v;
      if (k != "type" && k != "covariance" && k != "snr_db" && k != "bits" && k != "noise_var") {
        throw ConfigError("channel: unknown key '" + k + "'");
      }
    }
    c.channel.type = ch.value("type", c.channel.type);
    if (ch.contains("covariance")) c.channel.covariance = cov_from_json(ch["covariance"]);
    c.channel.snr_db = ch.value("snr_db", c.channel.snr_db);
    c.channel.bits = ch.value("bits", c.channel.bits);
    c.channel.noise_var = ch.value("noise_var", c.channel.noise_var);
  }
  return c;
}

std::string config_digest(const SystemConfig& config) {
  const std::string s = to_json_string(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

constexpr char kMagic[8] = {'R', 'A', 'M', 'P', 'I', 'N', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_matrix(std::ostream& os, const CMat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double re = m(r, c).real();
      const double im = m(r, c).imag();
      os.write(reinterpret_cast<const char*>(&re), sizeof(re));
      os.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
  }
}

CMat read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  CMat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double re = 0.0, im = 0.0;
      is.read(reinterpret_cast<char*>(&re), sizeof(re));
      is.read(reinterpret_cast<char*>(&im), sizeof(im));
      m(r, c) = cplx(re, im);
    }
  }
  return m;
}

}  // namespace

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("save_instance: cannot open '" + path + "'");
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(inst.config.l));
  write_u32(os, static_cast<std::uint32_t>(inst.config.n));
  write_u32(os, static_cast<std::uint32_t>(inst.config.m));
  const std::uint8_t has_w = inst.has_w() ? 1 : 0;
  os.write(reinterpret_cast<const char*>(&has_w), 1);
  const std::string cfg = to_json_string(inst.config);
  write_u32(os, static_cast<std::uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  write_matrix(os, inst.h);
  write_matrix(os, inst.x);
  write_matrix(os, inst.z);
  if (has_w) write_matrix(os, inst.w);
  write_matrix(os, inst.y);
  if (!os) throw ConfigError("save_instance: write failed for '" + path + "'");
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("load_instance: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("load_instance: bad magic in '" + path + "'");
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) throw ConfigError("load_instance: unsupported version");
  const std::uint32_t l = read_u32(is);
  const std::uint32_t n = read_u32(is);
  const std::uint32_t m = read_u32(is);
  std::uint8_t has_w = 0;
  is.read(reinterpret_cast<char*>(&has_w), 1);
  const std::uint32_t cfg_len = read_u32(is);
  std::string cfg(cfg_len, '\0');
  is.read(cfg.data(), cfg_len);
  ProblemInstance inst;
  inst.config = system_config_from_json(cfg);
  if (inst.config.l != static_cast<int>(l) || inst.config.n != static_cast<int>(n) ||
      inst.config.m != static_cast<int>(m)) {
    throw ConfigError("load_instance: header and config shapes disagree");
  }
  inst.h = read_matrix(is, l, n);
  inst.x = read_matrix(is, n, m);
  inst.z = read_matrix(is, l, m);
  if (has_w) inst.w = read_matrix(is, l, m);
  inst.y = read_matrix(is, l, m);
  if (!is) throw ConfigError("load_instance: truncated file '" + path + "'");
  return inst;
}

}  // namespace rowamp
