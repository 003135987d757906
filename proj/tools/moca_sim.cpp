// moca_sim: run experiment matrices, dump per-layer estimates, validate assets.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "moca/errors.hpp"
#include "moca/experiment.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kValidation = 3, kAbort = 4 };

int cmd_run(const std::string& config_path, const std::string& out_dir, unsigned workers,
            const std::string& seed_range, const std::string& baseline, bool emit_traces) {
  auto cfg = moca::load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (workers) cfg.workers = workers;
  if (!seed_range.empty()) cfg.seeds = moca::parse_seed_range(seed_range);
  if (!baseline.empty()) cfg.baseline = moca::parse_policy(baseline);
  if (emit_traces) cfg.emit_traces = true;
  cfg.validate();

  const auto lib = moca::NetworkLibrary::load_directory(cfg.networks_dir, cfg.soc);
  const auto keys = moca::expand_matrix(cfg);
  std::fprintf(stderr, "running %zu simulations on %u worker(s)\n", keys.size(), cfg.workers);
  const auto runs = moca::run_matrix(cfg, lib);
  for (const auto& p : moca::write_outputs(cfg, runs)) std::printf("%s\n", p.string().c_str());
  return kOk;
}

int cmd_estimate(const std::string& network, unsigned tiles, const std::optional<std::string>& config_path) {
  moca::SocConfig soc;
  if (config_path) soc = moca::load_experiment_config(*config_path).soc;
  if (tiles == 0 || tiles > soc.num_tiles)
    throw moca::ConfigError("--tiles must be in 1.." + std::to_string(soc.num_tiles));
  const auto net = moca::load_network(network, soc);
  std::cout << moca::estimate_csv(net, soc, tiles);
  return kOk;
}

int cmd_validate(const std::string& dir, double tolerance, const std::optional<std::string>& config_path) {
  moca::SocConfig soc;
  if (config_path) soc = moca::load_experiment_config(*config_path).soc;
  const auto rep = moca::validate_assets(dir, soc, {}, tolerance);
  std::printf("network,worst_layer,tiles,simulated_cycles,predicted_cycles,rel_error\n");
  for (const auto& c : rep.worst_per_network)
    std::printf("%s,%s,%u,%.1f,%llu,%.6f\n", c.network.c_str(), c.layer.c_str(), c.tiles, c.simulated_cycles,
                static_cast<unsigned long long>(c.predicted_cycles), c.rel_error);
  std::printf("# %zu networks, max per-layer error %.4f%% (tolerance %.1f%%): %s\n", rep.networks.size(),
              100.0 * rep.max_rel_error, 100.0 * rep.tolerance, rep.ok() ? "OK" : "FAIL");
  return rep.ok() ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-tenant accelerator memory-contention simulator"};
  app.require_subcommand(1);

  std::string config, out, seed_range, baseline;
  unsigned workers = 0;
  bool traces = false;
  auto* run = app.add_subcommand("run", "Run an experiment matrix and write CSVs");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides config)");
  run->add_option("--workers", workers, "Parallel simulations")->check(CLI::PositiveNumber);
  run->add_option("--seed-range", seed_range, "Seeds A..B inclusive (overrides config)");
  run->add_option("--baseline", baseline, "Policy the aggregates are normalized to");
  run->add_flag("--emit-traces", traces, "Write per-run tile/runtime/schedule traces");

  std::string network;
  unsigned tiles = 1;
  std::optional<std::string> soc_config;
  auto* est = app.add_subcommand("estimate", "Per-layer analytical estimate of one network");
  est->add_option("network", network, "Network description (JSON)")->required()->check(CLI::ExistingFile);
  est->add_option("--tiles", tiles, "Tiles allocated to the network")->capture_default_str();
  est->add_option("--config", soc_config, "Take the SoC parameters from this experiment config");

  std::string assets;
  double tolerance = 0.10;
  auto* val = app.add_subcommand("validate", "Check network assets and the estimator cross-check");
  val->add_option("assets", assets, "Directory of network descriptions")->required();
  val->add_option("--tolerance", tolerance, "Max relative per-layer error")->capture_default_str();
  val->add_option("--config", soc_config, "Take the SoC parameters from this experiment config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config, out, workers, seed_range, baseline, traces);
    if (*est) return cmd_estimate(network, tiles, soc_config);
    if (*val) return cmd_validate(assets, tolerance, soc_config);
  } catch (const moca::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const moca::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kConfig;
  } catch (const moca::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const moca::SimulationError& e) {
    std::fprintf(stderr, "simulation aborted: %s\n", e.what());
    return kAbort;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
