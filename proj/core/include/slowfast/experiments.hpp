#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slowfast/config.hpp"
#include "slowfast/flow.hpp"
#include "slowfast/levelsets.hpp"

namespace slowfast {

// Pass/fail gates; every experiment reads its thresholds from here.
struct Tolerances {
  double nsigma = 3.0;
  double averaging_sup = 0.02;
  double route_agreement = 0.01;
  double hitting_time = 0.02;
  double ribbon_ratio = 0.05;
  double width_slope = 0.1;
  double additivity = 0.01;
  double homogeneity_p = 0.01;
  double beta_change = 0.05;  // second noise map must move beta by at least this much
  double lambda_refinement = 0.01;
  double concentration = 0.9;
  double metastable_rate = 0.15;
  double invariant_p = 0.01;
  double ks_p = 0.01;
  double holding_mean = 0.25;
  double rotation_r2 = 0.95;
  double far_rotation = 0.05;
  double identity = 1e-10;
  double divergence = 1e-8;
  double conservation = 1e-9;
};

struct ExperimentConfig {
  std::string kind;
  Json system;  // surface system (or torus system for kind == "torus")
  int n_runs = 100;
  std::vector<double> eps;
  std::vector<double> delta;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string cache_dir;
  unsigned threads = 0;
  Tolerances tol;
  Json params = Json::object();  // experiment-specific knobs
};

// "system" may be inline or a file path, resolved against `base_dir`
ExperimentConfig experiment_config_from_json(const Json& j, const std::string& base_dir = "");
ExperimentConfig load_experiment_config(const std::string& path);
Tolerances tolerances_from_json(const Json& j);
Json to_json(const Tolerances& t);

// Entered-well event once G drops eta below the join saddle (classified, then stop);
// hit-boundary event at the level of P.
StepMonitor well_entry_monitor(const SurfaceSystem& sys, const ReebGraph& graph, double g_saddle,
                               double eta = 1e-3);

struct StatCell {
  std::string name;
  Json params = Json::object();
  int n = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double theory = 0.0;
  std::string provenance;  // route that produced the theory value
  std::string criterion;   // how pass is decided
  double tolerance = 0.0;
  bool gated = true;       // false: reported only
  bool pass = true;
  std::string note;
};

struct StatReport {
  std::string experiment;
  std::vector<StatCell> cells;
  std::vector<Json> runs;  // one record per Monte Carlo run
  Json extra = Json::object();
  double seconds = 0.0;

  bool pass() const;
  StatCell& add(StatCell c);
  const StatCell* find(const std::string& name) const;
  Json to_json() const;
  std::string text() const;
  // report.json, report.txt, cells.csv, runs.jsonl
  void write(const std::string& dir) const;
};

StatReport run_identity_suite(const ExperimentConfig& cfg);
StatReport run_averaging_experiment(const ExperimentConfig& cfg);
StatReport run_branching_experiment(const ExperimentConfig& cfg);
StatReport run_ribbon_experiment(const ExperimentConfig& cfg);
StatReport run_exit_law_experiment(const ExperimentConfig& cfg);
StatReport run_sde_branching_experiment(const ExperimentConfig& cfg);
StatReport run_metastability_experiment(const ExperimentConfig& cfg);
StatReport run_rotation_diagnostics(const ExperimentConfig& cfg);
StatReport run_torus_experiment(const ExperimentConfig& cfg);

// dispatch on cfg.kind; writes outputs when cfg.out_dir is set
StatReport run_experiment(const ExperimentConfig& cfg);
std::vector<std::string> experiment_kinds();

}  // namespace slowfast
