#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rowamp/harness.hpp"
#include "rowamp/parallel.hpp"

namespace {

using namespace rowamp;

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(out);
  if (!os) throw ConfigError("cannot open output file '" + out + "'");
  os << text;
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int trials = 0;
  int threads = 0;
  int mc_samples = 0;
};

void add_common(CLI::App* cmd, CommonFlags* f, bool config_required = true) {
  auto* opt = cmd->add_option("-c,--config", f->config, "experiment JSON file");
  if (config_required) opt->required();
  cmd->add_option("-o,--out", f->out, "output path ('-' for stdout)");
  cmd->add_option("--seed", f->seed, "override the experiment seed")
      ->each([f](const std::string&) { f->seed_set = true; });
  cmd->add_option("--trials", f->trials, "override the trial count");
  cmd->add_option("--threads", f->threads, "worker threads (ROWAMP_THREADS wins)");
  cmd->add_option("--mc-samples", f->mc_samples, "override Monte-Carlo sample counts");
}

void apply_overrides(const CommonFlags& f, ExperimentConfig* cfg) {
  if (f.seed_set) cfg->seed = f.seed;
  if (f.trials > 0) cfg->trials = f.trials;
  if (f.threads > 0) par::set_threads(f.threads);
  if (f.mc_samples > 0) {
    cfg->se.prior_mc.samples = f.mc_samples;
    cfg->se.channel_mc.samples = f.mc_samples;
    cfg->replica.se = cfg->se;
    cfg->replica.free_energy_mc.samples = f.mc_samples;
  }
}

ExperimentConfig load_with_overrides(const CommonFlags& f) {
  ExperimentConfig cfg = load_experiment(f.config);
  apply_overrides(f, &cfg);
  return cfg;
}

std::string system_json(int l, int n, int m, const std::string& prior, const std::string& channel) {
  return R"({"l": )" + std::to_string(l) + R"(, "n": )" + std::to_string(n) + R"(, "m": )" +
         std::to_string(m) + R"(, "seed": 7, "prior": )" + prior + R"(, "channel": )" + channel + "}";
}

std::string bg_prior(double rho, const std::string& kind, int m) {
  return R"({"type": "bernoulli-gaussian", "rho": )" + std::to_string(rho) +
         R"(, "covariance": {"kind": ")" + kind + R"(", "trace": )" + std::to_string(m) + "}}";
}

std::string awgn_channel(const std::string& kind, double snr) {
  return R"({"type": "awgn", "snr_db": )" + std::to_string(snr) +
         R"(, "covariance": {"kind": ")" + kind + R"("}})";
}

std::string preset_json(const std::string& name, bool full) {
  // Reproduction presets: desk-sized by default, --full restores the large
  // configurations (hours of CPU at the publication sizes).
  const std::string trials = std::to_string(full ? 100 : 20);
  const int l = full ? 256 : 128;
  const int n = full ? 512 : 256;
  const int m = full ? 10 : 4;
  if (name == "fig4") {
    // Per-iteration NMSE, full vs diagonal-restricted solver on correlated covariances.
    const std::string sys =
        system_json(l, n, m, bg_prior(0.1, "uniform-outer", m), awgn_channel("uniform-outer", 10.0));
    return R"({"name": "fig4", "system": )" + sys +
           R"(, "estimators": ["ep", "ep-diagonal"], "trials": )" + trials +
           R"(, "sweep": {"rho": [0.1, 0.15, 0.2]}})";
  }
  if (name == "fig5") {
    // Empirical trajectories against the deterministic prediction, undamped.
    const std::string sys = system_json(l, n, m, bg_prior(0.1, "uniform-outer-plus-2I", m),
                                        awgn_channel("uniform-outer-plus-2I", 10.0));
    return R"({"name": "fig5", "system": )" + sys + R"(, "estimators": ["ep"], "trials": )" +
           trials +
           R"(, "solver": {"damping": 1.0}, "sweep": {"snr_db": [5, 10, 15]}, "analysis": {"se": true}})";
  }
  if (name == "fig6") {
    // Terminal NMSE over the (sparsity, measurement count) grid.
    const int pn = full ? 512 : 128;
    const int pm = full ? 20 : 4;
    const std::string sys = system_json(pn / 2, pn, pm, bg_prior(0.1, "scaled-identity", pm),
                                        awgn_channel("scaled-identity", 20.0));
    const std::string ls = full ? "[64, 128, 192, 256, 320, 384, 448, 512]"
                                : "[16, 32, 48, 64, 80, 96, 112, 128]";
    return R"({"name": "fig6", "system": )" + sys + R"(, "trials": )" +
           std::to_string(full ? 50 : 10) +
           R"(, "sweep": {"rho": [0.05, 0.1, 0.15, 0.2, 0.25], "l": )" + ls + "}}";
  }
  if (name == "fig7") {
    // Asymptotic mutual information for Gaussian input, with the fixed-point report.
    const int d = full ? 256 : 64;
    const std::string prior =
        R"({"type": "gaussian", "covariance": {"kind": "ones-plus-I", "trace": 1.0}})";
    const std::string sys = system_json(d, d, 2, prior, awgn_channel("ones-plus-I", 10.0));
    return R"({"name": "fig7", "system": )" + sys +
           R"(, "sweep": {"snr_db": [0, 5, 10, 15, 20]}, "analysis": {"replica": true}})";
  }
  if (name == "fig8") {
    // Low-resolution outputs: NMSE versus quantizer depth, with the LS baseline.
    const std::string quant = R"({"type": "quantized", "snr_db": 10.0, "bits": 3})";
    const std::string sys = system_json(l, n, m, bg_prior(0.1, "scaled-identity", m), quant);
    return R"({"name": "fig8", "system": )" + sys +
           R"(, "estimators": ["ep", "ls"], "trials": )" + trials +
           R"(, "sweep": {"bits": [1, 2, 3, 12]}})";
  }
  throw ConfigError("unknown preset '" + name + "' (fig4..fig8)");
}

// One CSV per estimator tag, named <preset>_<tag>.csv inside out_dir.
void write_records_by_tag(const std::string& out_dir, const std::string& preset,
                          const std::vector<ResultRecord>& records) {
  std::vector<std::string> tags;
  for (const auto& r : records) {
    if (std::find(tags.begin(), tags.end(), r.estimator) == tags.end()) tags.push_back(r.estimator);
  }
  const std::string dir = out_dir.empty() ? "." : out_dir;
  for (const auto& tag : tags) {
    std::vector<ResultRecord> sel;
    for (const auto& r : records) {
      if (r.estimator == tag) sel.push_back(r);
    }
    const std::string path = dir + "/" + preset + "_" + tag + ".csv";
    write_or_print(path, results_to_csv(sel));
    std::cout << path << "\n";
  }
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Row-structured multi-measurement recovery: EP solver, deterministic "
               "trajectory prediction, and information estimates"};
  app.require_subcommand(1);

  CommonFlags sim_f, se_f, rep_f, mi_f, ph_f, repro_f;

  auto* sim = app.add_subcommand("simulate", "run estimators over an experiment sweep, emit CSV");
  add_common(sim, &sim_f);

  auto* se = app.add_subcommand("se", "deterministic per-iteration trajectory prediction (JSON)");
  add_common(se, &se_f);

  auto* rep = app.add_subcommand("replica", "asymptotic fixed point and free energy (JSON)");
  add_common(rep, &rep_f);

  auto* mi = app.add_subcommand("mutual-info", "asymptotic mutual information (JSON)");
  add_common(mi, &mi_f);

  auto* ph = app.add_subcommand("phase-diagram", "terminal NMSE over a (rho, L) grid, CSV");
  add_common(ph, &ph_f);

  auto* repro = app.add_subcommand("reproduce", "run a named preset (fig4..fig8)");
  std::string preset;
  bool full = false;
  repro->add_option("preset", preset, "fig4 | fig5 | fig6 | fig7 | fig8")->required();
  repro->add_flag("--full", full, "publication-sized configuration");
  add_common(repro, &repro_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits clean, bad arguments exit 2
  }

  if (sim->parsed()) {
    write_or_print(sim_f.out, results_to_csv(run_experiment(load_with_overrides(sim_f))));
  } else if (se->parsed()) {
    ExperimentConfig cfg = load_with_overrides(se_f);
    write_or_print(se_f.out, se_report_json(cfg) + "\n");
  } else if (rep->parsed()) {
    ExperimentConfig cfg = load_with_overrides(rep_f);
    write_or_print(rep_f.out, replica_report_json(cfg, false) + "\n");
  } else if (mi->parsed()) {
    ExperimentConfig cfg = load_with_overrides(mi_f);
    write_or_print(mi_f.out, replica_report_json(cfg, true) + "\n");
  } else if (ph->parsed()) {
    write_or_print(ph_f.out, phase_to_csv(sweep_phase_diagram(load_with_overrides(ph_f))));
  } else if (repro->parsed()) {
    ExperimentConfig cfg = experiment_from_json(preset_json(preset, full));
    apply_overrides(repro_f, &cfg);
    if (preset == "fig6") {
      const std::string dir = repro_f.out.empty() ? "." : repro_f.out;
      const std::string path = dir + "/" + preset + "_phase.csv";
      write_or_print(repro_f.out == "-" ? "-" : path, phase_to_csv(sweep_phase_diagram(cfg)));
      if (repro_f.out != "-") std::cout << path << "\n";
    } else if (preset == "fig7") {
      const std::string dir = repro_f.out.empty() ? "." : repro_f.out;
      const std::string path = dir + "/" + preset + "_mi.json";
      write_or_print(repro_f.out == "-" ? "-" : path, replica_report_json(cfg, true) + "\n");
      if (repro_f.out != "-") std::cout << path << "\n";
    } else if (repro_f.out == "-") {
      write_or_print("-", results_to_csv(run_experiment(cfg)));
    } else {
      write_records_by_tag(repro_f.out, preset, run_experiment(cfg));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const rowamp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rowamp::UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const rowamp::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
