#include "rowamp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rowamp/parallel.hpp"
#include "rowamp/rng.hpp"

namespace rowamp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    bool ok = false;
    for (const char* a : allowed) {
      if (k == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
  }
}

}  // namespace

ExperimentConfig experiment_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  reject_unknown(j, {"name", "system", "estimators", "solver", "trials", "seed", "sweep", "analysis", "mc"},
                 "experiment config");
  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  if (!j.contains("system")) throw ConfigError("experiment config: missing 'system'");
  cfg.system = system_config_from_json(j["system"].dump());
  if (j.contains("estimators")) {
    cfg.estimators.clear();
    for (const auto& e : j["estimators"]) {
      const std::string name = e.get<std::string>();
      if (name != "ep" && name != "ep-diagonal" && name != "ls") {
        throw ConfigError("experiment config: unknown estimator '" + name + "'");
      }
      cfg.estimators.push_back(name);
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s, {"max_iters", "damping", "tol", "jitter", "diagonal"}, "solver");
    cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
    cfg.solver.damping = s.value("damping", cfg.solver.damping);
    cfg.solver.tol = s.value("tol", cfg.solver.tol);
    cfg.solver.jitter = s.value("jitter", cfg.solver.jitter);
    cfg.solver.diagonal = s.value("diagonal", cfg.solver.diagonal);
  }
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    reject_unknown(s, {"snr_db", "rho", "l", "bits"}, "sweep");
    if (s.contains("snr_db")) cfg.snr_db = s["snr_db"].get<std::vector<double>>();
    if (s.contains("rho")) cfg.rho = s["rho"].get<std::vector<double>>();
    if (s.contains("l")) cfg.l_values = s["l"].get<std::vector<int>>();
    if (s.contains("bits")) cfg.bits = s["bits"].get<std::vector<int>>();
  }
  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    reject_unknown(a, {"se", "replica"}, "analysis");
    cfg.run_se = a.value("se", cfg.run_se);
    cfg.run_replica = a.value("replica", cfg.run_replica);
  }
  if (j.contains("mc")) {
    const json& m = j["mc"];
    reject_unknown(m, {"prior_samples", "channel_samples", "seed"}, "mc");
    cfg.se.prior_mc.samples = m.value("prior_samples", cfg.se.prior_mc.samples);
    cfg.se.channel_mc.samples = m.value("channel_samples", cfg.se.channel_mc.samples);
    cfg.se.prior_mc.seed = m.value("seed", cfg.se.prior_mc.seed);
    cfg.se.channel_mc.seed = mix_seed(cfg.se.prior_mc.seed ^ 0xC4A2);
  }
  if (cfg.trials < 1) throw ConfigError("experiment config: trials must be >= 1");
  cfg.replica.se = cfg.se;
  cfg.replica.free_energy_mc.samples = cfg.se.prior_mc.samples;
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("load_experiment: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return experiment_from_json(ss.str());
}

CMat ls_baseline(const CMat& h, const CMat& y) {
  if (h.rows() != y.rows()) throw ConfigError("ls_baseline: shape mismatch");
  const Eigen::Index l = h.rows();
  const Eigen::Index n = h.cols();
  if (l >= n) {
    return h.colPivHouseholderQr().solve(y);
  }
  const CMat gram = h.adjoint() * h;
  const double lambda = 1e-6 * gram.trace().real() / static_cast<double>(n);
  const CMat reg = gram + lambda * CMat::Identity(n, n);
  return reg.ldlt().solve(h.adjoint() * y);
}

namespace {

SystemConfig apply_axis(const SystemConfig& base, double snr, double rho, int l, int bits) {
  SystemConfig sc = base;
  sc.channel.snr_db = snr;
  sc.prior.rho = rho;
  sc.l = l;
  sc.channel.bits = bits;
  return sc;
}

// Per-trial per-iteration outcome; nmse < 0 marks an undefined metric.
struct TrialTraj {
  std::vector<double> nmse;
  std::vector<double> seconds;
  bool valid = true;
};

Problem diagonal_variant(const Problem& p) {
  SystemConfig sc = p.config;
  Problem d;
  d.config = sc;
  d.sigma_x = diagonal_restriction(p.sigma_x);
  d.sigma_w = diagonal_restriction(p.sigma_w);
  if (const auto* bg = dynamic_cast<const BernoulliGaussianRowPrior*>(p.prior.get())) {
    d.prior = std::make_shared<BernoulliGaussianRowPrior>(bg->rho(), d.sigma_x);
  } else {
    d.prior = std::make_shared<GaussianRowPrior>(d.sigma_x);
  }
  if (p.channel->awgn_cov() != nullptr) {
    d.channel = std::make_shared<AwgnRowChannel>(d.sigma_w);
  } else {
    d.channel = p.channel;
  }
  return d;
}

std::vector<ResultRecord> aggregate(const std::vector<TrialTraj>& trials, const ResultRecord& proto) {
  std::size_t max_len = 0;
  for (const auto& t : trials) {
    if (t.valid) max_len = std::max(max_len, t.nmse.size());
  }
  std::vector<ResultRecord> out;
  if (max_len == 0) return out;
  for (std::size_t it = 0; it < max_len; ++it) {
    double sum = 0.0, sum2 = 0.0, secs = 0.0;
    int count = 0;
    for (const auto& t : trials) {
      if (!t.valid || t.nmse.empty()) continue;
      const std::size_t k = std::min(it, t.nmse.size() - 1);  // hold terminal value
      const double v = t.nmse[k];
      sum += v;
      sum2 += v * v;
      secs += t.seconds[k];
      ++count;
    }
    if (count == 0) continue;
    const double mean = sum / count;
    const double var = std::max(sum2 / count - mean * mean, 0.0);
    const double se_lin = count > 1 ? std::sqrt(var / count) : 0.0;
    ResultRecord rec = proto;
    rec.iter = proto.iter == 0 ? 0 : static_cast<int>(it) + 1;
    rec.nmse_db = to_db(mean);
    rec.nmse_db_stderr = mean > 0.0 ? (10.0 / std::log(10.0)) * se_lin / mean : 0.0;
    rec.trials = count;
    rec.seconds = secs / count;
    out.push_back(rec);
  }
  return out;
}

std::vector<TrialTraj> run_estimator_trials(const Problem& prob, const std::string& estimator,
                                            const ExperimentConfig& cfg) {
  const Problem* run_prob = &prob;
  Problem diag_prob;
  SolverOptions sopt = cfg.solver;
  if (estimator == "ep-diagonal") {
    diag_prob = diagonal_variant(prob);
    run_prob = &diag_prob;
    sopt.diagonal = true;
  }
  std::vector<TrialTraj> trials(cfg.trials);
  par::parallel_for(cfg.trials, [&](std::ptrdiff_t t) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(t);
    const ProblemInstance inst = generate_instance(prob, seed);
    TrialTraj& out = trials[t];
    try {
      if (estimator == "ls") {
        const auto start = std::chrono::steady_clock::now();
        const CMat xhat = ls_baseline(inst.h, inst.y);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.nmse.push_back(nmse(xhat, inst.x).nmse);
        out.seconds.push_back(secs);
      } else {
        if (inst.x.squaredNorm() <= 0.0) throw UndefinedMetricError("zero signal");
        const EPResult res = ep_run(*run_prob, inst, sopt, &inst.x);
        for (const auto& rec : res.trajectory) {
          out.nmse.push_back(std::pow(10.0, rec.nmse_db / 10.0));
          out.seconds.push_back(rec.seconds);
        }
      }
    } catch (const UndefinedMetricError&) {
      out.valid = false;
    }
  });
  return trials;
}

json matrix_to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    }
    rows.push_back(row);
  }
  return rows;
}

template <typename Fn>
void for_each_axis(const ExperimentConfig& cfg, Fn&& fn) {
  const std::vector<double> snrs =
      cfg.snr_db.empty() ? std::vector<double>{cfg.system.channel.snr_db} : cfg.snr_db;
  const std::vector<double> rhos = cfg.rho.empty() ? std::vector<double>{cfg.system.prior.rho} : cfg.rho;
  const std::vector<int> ls = cfg.l_values.empty() ? std::vector<int>{cfg.system.l} : cfg.l_values;
  const std::vector<int> bits = cfg.bits.empty() ? std::vector<int>{cfg.system.channel.bits} : cfg.bits;
  for (const double snr : snrs) {
    for (const double rho : rhos) {
      for (const int l : ls) {
        for (const int b : bits) fn(apply_axis(cfg.system, snr, rho, l, b));
      }
    }
  }
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg) {
  std::vector<ResultRecord> records;
  for_each_axis(cfg, [&](const SystemConfig& sc) {
    const Problem prob = realize(sc);
    ResultRecord proto;
    proto.digest = config_digest(sc);
    proto.name = cfg.name;
    proto.snr_db = sc.channel.snr_db;
    proto.rho = sc.prior.rho;
    proto.l = sc.l;
    proto.bits = sc.channel.type == "quantized" ? sc.channel.bits : 0;

    for (const std::string& est : cfg.estimators) {
      ResultRecord p = proto;
      p.estimator = est;
      p.iter = est == "ls" ? 0 : 1;
      const auto trials = run_estimator_trials(prob, est, cfg);
      auto recs = aggregate(trials, p);
      records.insert(records.end(), recs.begin(), recs.end());
    }

    const double a_trace = prob.prior->mean_covariance().trace().real();
    if (cfg.run_se) {
      const auto start = std::chrono::steady_clock::now();
      const SERun run = se_run(*prob.prior, *prob.channel, sc.alpha(), cfg.se);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (std::size_t k = 1; k < run.trajectory.size(); ++k) {
        ResultRecord rec = proto;
        rec.estimator = "se";
        rec.iter = static_cast<int>(k);
        rec.nmse_db = to_db(run.trajectory[k].qx.trace().real() / a_trace);
        rec.nmse_db_stderr = 0.0;
        rec.trials = 0;
        rec.seconds = secs;
        records.push_back(rec);
      }
    }
    if (cfg.run_replica) {
      const auto start = std::chrono::steady_clock::now();
      ReplicaOptions ropt = cfg.replica;
      ropt.se = cfg.se;
      const ReplicaSolution sol = replica_fixed_point(*prob.prior, *prob.channel, sc.alpha(), ropt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ResultRecord rec = proto;
      rec.estimator = "replica";
      rec.iter = 0;
      rec.nmse_db = to_db(sol.mmse.trace().real() / a_trace);
      rec.nmse_db_stderr = 0.0;
      rec.trials = 0;
      rec.seconds = secs;
      records.push_back(rec);
    }
  });
  return records;
}

std::string results_to_csv(const std::vector<ResultRecord>& records) {
  std::string out = "digest,name,snr_db,rho,l,bits,estimator,iter,nmse_db,nmse_db_stderr,trials,seconds\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%.10g,%d,%d,%s,%d,%.10g,%.10g,%d,%.6g\n",
                  r.digest.c_str(), r.name.c_str(), r.snr_db, r.rho, r.l, r.bits, r.estimator.c_str(),
                  r.iter, r.nmse_db, r.nmse_db_stderr, r.trials, r.seconds);
    out += buf;
  }
  return out;
}

std::vector<PhaseRecord> sweep_phase_diagram(const ExperimentConfig& cfg) {
  if (cfg.rho.empty() || cfg.l_values.empty()) {
    throw ConfigError("sweep_phase_diagram: sweep.rho and sweep.l must both be set");
  }
  std::vector<PhaseRecord> out;
  for (const double rho : cfg.rho) {
    for (const int l : cfg.l_values) {
      const SystemConfig sc = apply_axis(cfg.system, cfg.system.channel.snr_db, rho, l,
                                         cfg.system.channel.bits);
      const Problem prob = realize(sc);
      const auto trials = run_estimator_trials(prob, "ep", cfg);
      double sum = 0.0;
      int count = 0;
      for (const auto& t : trials) {
        if (!t.valid || t.nmse.empty()) continue;
        sum += t.nmse.back();
        ++count;
      }
      PhaseRecord rec;
      rec.digest = config_digest(sc);
      rec.rho = rho;
      rec.l = l;
      rec.nmse_db = count > 0 ? to_db(sum / count) : std::numeric_limits<double>::quiet_NaN();
      rec.trials = count;
      out.push_back(rec);
    }
  }
  return out;
}

std::string phase_to_csv(const std::vector<PhaseRecord>& records) {
  std::string out = "digest,rho,l,nmse_db,trials\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%d,%.10g,%d\n", r.digest.c_str(), r.rho, r.l, r.nmse_db,
                  r.trials);
    out += buf;
  }
  return out;
}

std::string se_report_json(const ExperimentConfig& cfg) {
  json out = json::array();
  for_each_axis(cfg, [&](const SystemConfig& sc) {
    const Problem prob = realize(sc);
    const double a_trace = prob.prior->mean_covariance().trace().real();
    const SERun run = se_run(*prob.prior, *prob.channel, sc.alpha(), cfg.se);
    json rec{{"digest", config_digest(sc)}, {"snr_db", sc.channel.snr_db}, {"rho", sc.prior.rho},
             {"l", sc.l}, {"converged", run.converged}};
    json traj = json::array();
    for (const auto& st : run.trajectory) {
      traj.push_back(json{{"iter", st.iter},
                          {"mse", st.qx.trace().real() / sc.m},
                          {"nmse_db", to_db(st.qx.trace().real() / a_trace)}});
    }
    rec["trajectory"] = traj;
    rec["qx"] = matrix_to_json(run.trajectory.back().qx);
    out.push_back(rec);
  });
  return out.dump(2);
}

std::string replica_report_json(const ExperimentConfig& cfg, bool with_mutual_info) {
  json out = json::array();
  for_each_axis(cfg, [&](const SystemConfig& sc) {
    const Problem prob = realize(sc);
    const double a_trace = prob.prior->mean_covariance().trace().real();
    ReplicaOptions ropt = cfg.replica;
    ropt.se = cfg.se;
    const ReplicaSolution sol = replica_fixed_point(*prob.prior, *prob.channel, sc.alpha(), ropt);
    json rec{{"digest", config_digest(sc)},
             {"snr_db", sc.channel.snr_db},
             {"rho", sc.prior.rho},
             {"l", sc.l},
             {"a", matrix_to_json(sol.a)},
             {"b", matrix_to_json(sol.b)},
             {"b_tilde", matrix_to_json(sol.b_tilde)},
             {"mse", sol.mmse.trace().real() / sc.m},
             {"nmse_db", to_db(sol.mmse.trace().real() / a_trace)},
             {"free_energy", sol.free_energy.value},
             {"free_energy_stderr", sol.free_energy.std_error},
             {"iterations", sol.iterations},
             {"residual", sol.residual},
             {"converged", sol.converged},
             {"branches_found", sol.branches_found}};
    if (with_mutual_info) {
      const ValueWithError mi =
          mutual_information(*prob.prior, *prob.channel, sc.l, sc.n, sol, cfg.replica.free_energy_mc);
      rec["mutual_info"] = mi.value;
      rec["mutual_info_stderr"] = mi.std_error;
    }
    out.push_back(rec);
  });
  return out.dump(2);
}

}  // namespace rowamp
