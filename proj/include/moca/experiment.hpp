#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moca/metrics.hpp"
#include "moca/simcore.hpp"

namespace moca {

struct ExperimentConfig {
  std::vector<Policy> policies{Policy::Moca, Policy::TimeMux, Policy::Static, Policy::DynCompute};
  std::vector<WorkloadSet> workload_sets{WorkloadSet::C};
  std::vector<QosLevel> qos_levels{QosLevel::M};
  std::vector<std::uint64_t> seeds{1};
  std::size_t n_tasks = 250;
  bool allow_any_n = false;
  double qos_k = 2.0;
  double arrival_scale = 0.5;
  std::vector<double> priority_weights = default_priority_weights();
  std::filesystem::path networks_dir;
  std::filesystem::path output_dir = "results";
  Policy baseline = Policy::DynCompute;
  SocConfig soc;
  Cycle epoch_cycles = 100;
  Cycle max_cycles = 1'000'000'000'000;
  RuntimeOptions runtime;
  SchedulerOptions scheduler;
  unsigned workers = 1;
  bool emit_traces = false;

  void validate() const;
};

/// Relative paths inside the config resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// "A..B" (inclusive) -> A, A+1, ..., B.
std::vector<std::uint64_t> parse_seed_range(std::string_view text);

struct RunKey {
  Policy policy = Policy::Moca;
  WorkloadSet set = WorkloadSet::C;
  QosLevel level = QosLevel::M;
  std::uint64_t seed = 0;
};

struct RunOutcome {
  RunKey key;
  SimResult result;
  IsolatedMap isolated;
  MetricsReport metrics;
};

/// Matrix in config order (policy, set, level, seed), one entry per run.
std::vector<RunKey> expand_matrix(const ExperimentConfig& cfg);

SimConfig make_sim_config(const ExperimentConfig& cfg, const RunKey& key, const NetworkLibrary& lib);

/// Runs every matrix cell on `cfg.workers` threads; the returned order is
/// that of expand_matrix regardless of scheduling.
std::vector<RunOutcome> run_matrix(const ExperimentConfig& cfg, const NetworkLibrary& lib);

/// Writes results.csv, metrics.csv and the four aggregate files (plus traces
/// when enabled) into cfg.output_dir. Returns the paths written.
std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs);

std::string results_csv(const std::vector<RunOutcome>& runs);
std::string metrics_csv(const std::vector<RunOutcome>& runs);
std::string sla_overall_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs);
std::string sla_by_priority_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs);
std::string stp_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs);
std::string fairness_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs);

/// Per-layer estimate table with a trailing TOTAL row.
std::string estimate_csv(const NetworkDesc& net, const SocConfig& soc, unsigned tiles);

struct LayerCheck {
  std::string network;
  std::string layer;
  unsigned tiles = 0;
  double simulated_cycles = 0;
  Cycle predicted_cycles = 0;
  double rel_error = 0;
};

/// Contention-free per-layer latency of one network, alone on `tiles` tiles,
/// against the estimator.
std::vector<LayerCheck> cross_check_network(const NetworkDesc& net, const SocConfig& soc, unsigned tiles);

struct ValidationReport {
  std::vector<std::string> networks;
  std::vector<LayerCheck> worst_per_network;
  double max_rel_error = 0;
  double tolerance = 0.10;
  bool ok() const { return max_rel_error <= tolerance; }
};

/// Loads every network in `dir` (throws ValidationError/ParseError on a bad
/// file) and cross-checks each on the given tile counts.
ValidationReport validate_assets(const std::filesystem::path& dir, const SocConfig& soc,
                                 std::vector<unsigned> tile_counts = {}, double tolerance = 0.10);

}  // namespace moca
