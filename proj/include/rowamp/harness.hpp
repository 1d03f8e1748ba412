#pragma once

#include <string>
#include <vector>

#include "rowamp/analysis.hpp"
#include "rowamp/ep_solver.hpp"
#include "rowamp/model.hpp"

namespace rowamp {

struct ExperimentConfig {
  std::string name = "experiment";
  SystemConfig system;
  std::vector<std::string> estimators{"ep"};  // ep | ep-diagonal | ls
  SolverOptions solver;
  int trials = 1;
  std::uint64_t seed = 1;  // trial seeds are substreams of this
  // Sweep axes; empty means "use the value already in system".
  std::vector<double> snr_db;
  std::vector<double> rho;
  std::vector<int> l_values;
  std::vector<int> bits;
  bool run_se = false;
  bool run_replica = false;
  SEOptions se;
  ReplicaOptions replica;
};

ExperimentConfig experiment_from_json(const std::string& text);
ExperimentConfig load_experiment(const std::string& path);

struct ResultRecord {
  std::string digest;
  std::string name;
  double snr_db = 0.0;
  double rho = 0.0;
  int l = 0;
  int bits = 0;
  std::string estimator;
  int iter = 0;  // 0 for one-shot estimators
  double nmse_db = 0.0;
  double nmse_db_stderr = 0.0;
  int trials = 0;
  double seconds = 0.0;
};

// Runs every estimator over every axis combination, aggregating NMSE per
// iteration across trials (linear mean, delta-method stderr in dB).
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg);

std::string results_to_csv(const std::vector<ResultRecord>& records);

struct PhaseRecord {
  std::string digest;
  double rho = 0.0;
  int l = 0;
  double nmse_db = 0.0;
  int trials = 0;
};

// Terminal EP NMSE over the (rho, L) grid.
std::vector<PhaseRecord> sweep_phase_diagram(const ExperimentConfig& cfg);

std::string phase_to_csv(const std::vector<PhaseRecord>& records);

// Least-squares baseline: QR solve when L >= N, ridge-regularized normal
// equations with lambda = 1e-6 tr(H^H H)/N otherwise.
CMat ls_baseline(const CMat& h, const CMat& y);

// Fixed-point reports for the se / replica / mutual-info subcommands.
std::string se_report_json(const ExperimentConfig& cfg);
std::string replica_report_json(const ExperimentConfig& cfg, bool with_mutual_info);

}  // namespace rowamp
