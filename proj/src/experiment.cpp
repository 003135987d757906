#include "moca/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "moca/errors.hpp"
#include "moca/estimator.hpp"

namespace moca {

using nlohmann::json;
namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  if (policies.empty() || workload_sets.empty() || qos_levels.empty() || seeds.empty())
    throw ConfigError("experiment matrix axes must be non-empty");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (epoch_cycles == 0) throw ConfigError("epoch_cycles must be >= 1");
  if (networks_dir.empty()) throw ConfigError("networks_dir is required");
  WorkloadParams p;
  p.n = n_tasks;
  p.allow_any_n = allow_any_n;
  p.qos_k = qos_k;
  p.arrival_scale = arrival_scale;
  p.priority_weights = priority_weights;
  try {
    p.validate();
    soc.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

template <class T, class F>
std::vector<T> parse_list(const json& j, const char* key, F parse_one) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string("'") + key + "' must be a non-empty array");
  std::vector<T> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(std::string("'") + key + "' entries must be strings");
    out.push_back(parse_one(v.template get<std::string>()));
  }
  return out;
}

void parse_soc(const json& j, SocConfig& soc) {
  if (!j.is_object()) throw ConfigError("'soc' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "num_tiles") soc.num_tiles = v.get<unsigned>();
    else if (k == "pes_per_tile") soc.pes_per_tile = v.get<unsigned>();
    else if (k == "scratchpad_bytes_per_tile") soc.scratchpad_bytes_per_tile = v.get<Bytes>();
    else if (k == "accumulator_bytes_per_tile") soc.accumulator_bytes_per_tile = v.get<Bytes>();
    else if (k == "l2_bytes") soc.l2_bytes = v.get<Bytes>();
    else if (k == "l2_banks") soc.l2_banks = v.get<unsigned>();
    else if (k == "dram_bw_bytes_per_cycle") soc.dram_bw_bytes_per_cycle = v.get<double>();
    else if (k == "l2_bw_bytes_per_cycle") soc.l2_bw_bytes_per_cycle = v.get<double>();
    else if (k == "frequency_hz") soc.frequency_hz = v.get<double>();
    else if (k == "overlap_f") soc.overlap_f = v.get<double>();
    else if (k == "mem_repartition_cost_cycles") soc.mem_repartition_cost_cycles = v.get<Cycle>();
    else if (k == "compute_repartition_cost_cycles") soc.compute_repartition_cost_cycles = v.get<Cycle>();
    else if (k == "pipeline_chunks") soc.pipeline_chunks = v.get<unsigned>();
    else throw ConfigError("unknown soc field '" + k + "'");
  }
}

void parse_runtime(const json& j, RuntimeOptions& r) {
  if (!j.is_object()) throw ConfigError("'runtime' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "throttling") r.throttling = v.get<bool>();
    else if (k == "refresh_on_change") r.refresh_on_change = v.get<bool>();
    else if (k == "score_cap") r.score_cap = v.get<double>();
    else if (k == "literal_prediction_update") r.literal_prediction_update = v.get<bool>();
    else if (k == "split_window_by_tiles") r.split_window_by_tiles = v.get<bool>();
    else if (k == "max_window_cycles") r.max_window_cycles = v.get<Cycle>();
    else if (k == "literal_multi_corunner_share") r.literal_multi_corunner_share = v.get<bool>();
    else if (k == "score_share_floor") r.score_share_floor = v.get<bool>();
    else if (k == "compute_repartition_streak") r.compute_repartition_streak = v.get<unsigned>();
    else if (k == "high_priority_min") r.high_priority_min = v.get<int>();
    else throw ConfigError("unknown runtime field '" + k + "'");
  }
}

void parse_scheduler(const json& j, SchedulerOptions& s) {
  if (!j.is_object()) throw ConfigError("'scheduler' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "threshold") s.threshold = v.get<double>();
    else if (k == "min_tiles_per_task") s.min_tiles_per_task = v.get<unsigned>();
    else if (k == "bandwidth_gate") s.bandwidth_gate = v.get<bool>();
    else if (k == "static_groups") s.static_groups = v.get<unsigned>();
    else if (k == "max_corunners") s.max_corunners = v.get<unsigned>();
    else if (k == "moca_rebalance") s.moca_rebalance = v.get<bool>();
    else throw ConfigError("unknown scheduler field '" + k + "'");
  }
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

std::vector<std::uint64_t> parse_seed_range(std::string_view text) {
  const auto dots = text.find("..");
  std::uint64_t a = 0, b = 0;
  try {
    if (dots == std::string_view::npos) {
      a = b = std::stoull(std::string(text));
    } else {
      a = std::stoull(std::string(text.substr(0, dots)));
      b = std::stoull(std::string(text.substr(dots + 2)));
    }
  } catch (const std::exception&) {
    throw ConfigError("bad seed range '" + std::string(text) + "' (expected A..B)");
  }
  if (b < a) throw ConfigError("seed range end precedes start");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
  return out;
}

ExperimentConfig parse_experiment_config(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("experiment config: ") + e.what(), line_of(text, e.byte ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");

  ExperimentConfig cfg;
  cfg.networks_dir = base_dir / "networks";
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  try {
    for (const auto& [k, v] : doc.items()) {
      if (k == "policies") cfg.policies = parse_list<Policy>(v, "policies", parse_policy);
      else if (k == "workload_sets") cfg.workload_sets = parse_list<WorkloadSet>(v, "workload_sets", parse_workload_set);
      else if (k == "qos_levels") cfg.qos_levels = parse_list<QosLevel>(v, "qos_levels", parse_qos_level);
      else if (k == "seeds") {
        if (v.is_string()) cfg.seeds = parse_seed_range(v.get<std::string>());
        else cfg.seeds = v.get<std::vector<std::uint64_t>>();
      }
      else if (k == "n_tasks") cfg.n_tasks = v.get<std::size_t>();
      else if (k == "allow_any_n") cfg.allow_any_n = v.get<bool>();
      else if (k == "qos_k") cfg.qos_k = v.get<double>();
      else if (k == "arrival_scale") cfg.arrival_scale = v.get<double>();
      else if (k == "priority_weights") cfg.priority_weights = v.get<std::vector<double>>();
      else if (k == "networks_dir") cfg.networks_dir = resolve(v.get<std::string>());
      else if (k == "output_dir") cfg.output_dir = resolve(v.get<std::string>());
      else if (k == "baseline") cfg.baseline = parse_policy(v.get<std::string>());
      else if (k == "soc") parse_soc(v, cfg.soc);
      else if (k == "epoch_cycles") cfg.epoch_cycles = v.get<Cycle>();
      else if (k == "max_cycles") cfg.max_cycles = v.get<Cycle>();
      else if (k == "runtime") parse_runtime(v, cfg.runtime);
      else if (k == "scheduler") parse_scheduler(v, cfg.scheduler);
      else if (k == "workers") cfg.workers = v.get<unsigned>();
      else if (k == "emit_traces") cfg.emit_traces = v.get<bool>();
      else throw ConfigError("unknown config field '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path.parent_path());
}

std::vector<RunKey> expand_matrix(const ExperimentConfig& cfg) {
  std::vector<RunKey> keys;
  for (Policy p : cfg.policies)
    for (WorkloadSet s : cfg.workload_sets)
      for (QosLevel l : cfg.qos_levels)
        for (std::uint64_t seed : cfg.seeds) keys.push_back({p, s, l, seed});
  return keys;
}

namespace {

WorkloadScenario scenario_for(const ExperimentConfig& cfg, const RunKey& key, const NetworkLibrary& lib) {
  WorkloadParams p;
  p.seed = key.seed;
  p.n = cfg.n_tasks;
  p.set = key.set;
  p.qos_level = key.level;
  p.qos_k = cfg.qos_k;
  p.arrival_scale = cfg.arrival_scale;
  p.priority_weights = cfg.priority_weights;
  p.allow_any_n = cfg.allow_any_n;
  return generate_workload(p, lib, cfg.soc);
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::min<std::size_t>(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string key_label(const RunKey& k) {
  return std::string(to_string(k.policy)) + "/" + std::string(to_string(k.set)) + "/" +
         std::string(to_string(k.level)) + "/seed" + std::to_string(k.seed);
}

}  // namespace

SimConfig make_sim_config(const ExperimentConfig& cfg, const RunKey& key, const NetworkLibrary& lib) {
  SimConfig sim;
  sim.soc = cfg.soc;
  sim.policy = key.policy;
  sim.scenario = scenario_for(cfg, key, lib);
  sim.epoch_cycles = cfg.epoch_cycles;
  sim.max_cycles = cfg.max_cycles;
  sim.runtime = cfg.runtime;
  sim.scheduler = cfg.scheduler;
  sim.record_tile_trace = sim.record_runtime_trace = sim.record_schedule_trace = cfg.emit_traces;
  return sim;
}

std::vector<RunOutcome> run_matrix(const ExperimentConfig& cfg, const NetworkLibrary& lib) {
  cfg.validate();
  const auto keys = expand_matrix(cfg);

  // C_single per (policy, network), shared by every run of that policy.
  std::set<std::string> names;
  for (WorkloadSet s : cfg.workload_sets)
    for (const auto& n : workload_set_members(s)) names.insert(n);
  std::vector<std::pair<Policy, std::string>> solo_jobs;
  for (Policy p : cfg.policies)
    for (const auto& n : names) solo_jobs.emplace_back(p, n);
  std::vector<Cycle> solo(solo_jobs.size());
  SimConfig base;
  base.epoch_cycles = cfg.epoch_cycles;
  base.max_cycles = cfg.max_cycles;
  base.runtime = cfg.runtime;
  base.scheduler = cfg.scheduler;
  parallel_for(solo_jobs.size(), cfg.workers, [&](std::size_t i) {
    TaskSpec t;
    t.network = lib.get(solo_jobs[i].second);
    t.qos_target_cycles = 1;
    solo[i] = run_isolated(t, cfg.soc, solo_jobs[i].first, base);
  });
  std::map<std::pair<Policy, std::string>, Cycle> solo_map;
  for (std::size_t i = 0; i < solo_jobs.size(); ++i) solo_map[solo_jobs[i]] = solo[i];

  std::vector<RunOutcome> runs(keys.size());
  parallel_for(keys.size(), cfg.workers, [&](std::size_t i) {
    RunOutcome& out = runs[i];
    out.key = keys[i];
    try {
      out.result = run_simulation(make_sim_config(cfg, keys[i], lib));
    } catch (const SimulationError& e) {
      throw SimulationError(key_label(keys[i]) + ": " + e.what());
    }
    for (const auto& t : out.result.tasks) out.isolated[t.task_id] = solo_map.at({keys[i].policy, t.network});
    out.metrics = compute_metrics(out.result.tasks, out.isolated);
  });
  return runs;
}

std::string results_csv(const std::vector<RunOutcome>& runs) {
  std::ostringstream os;
  os << "policy,workload_set,qos_level,seed,task_id,network,priority,dispatch_cycle,start_cycle,finish_cycle,"
        "end_to_end_cycles,qos_target_cycles,deadline_met,isolated_cycles,migrations,throttle_reconfigs,"
        "migration_cycles,dram_bytes_served\n";
  for (const auto& r : runs)
    for (const auto& t : r.result.tasks)
      os << to_string(r.key.policy) << ',' << to_string(r.key.set) << ',' << to_string(r.key.level) << ','
         << r.key.seed << ',' << t.task_id << ',' << t.network << ',' << t.priority << ',' << t.dispatch_cycle << ','
         << t.start_cycle << ',' << t.finish_cycle << ',' << t.end_to_end_cycles << ',' << t.qos_target_cycles << ','
         << (t.deadline_met ? 1 : 0) << ',' << r.isolated.at(t.task_id) << ',' << t.migrations << ','
         << t.throttle_reconfigs << ',' << t.migration_cycles << ',' << t.dram_bytes_served << '\n';
  return os.str();
}

std::string metrics_csv(const std::vector<RunOutcome>& runs) {
  std::ostringstream os;
  os << "policy,workload_set,qos_level,seed,n_tasks,sla_overall,sla_p_low,sla_p_mid,sla_p_high,stp,fairness,"
        "makespan,mem_reconfigs,compute_migrations,migration_cycles\n";
  for (const auto& r : runs) {
    const auto& m = r.metrics;
    const auto c = count_repartition_events(r.result);
    os << to_string(r.key.policy) << ',' << to_string(r.key.set) << ',' << to_string(r.key.level) << ','
       << r.key.seed << ',' << r.result.tasks.size() << ',' << fmt(m.sla.overall) << ',' << fmt(m.sla.by_group[0])
       << ',' << fmt(m.sla.by_group[1]) << ',' << fmt(m.sla.by_group[2]) << ',' << fmt(m.stp) << ','
       << fmt(m.fairness.fairness) << ',' << r.result.makespan << ',' << c.mem_reconfigs << ','
       << c.compute_migrations << ',' << c.migration_cycles << '\n';
  }
  return os.str();
}

namespace {

struct CellKey {
  WorkloadSet set;
  QosLevel level;
  Policy policy;
  bool operator<(const CellKey& o) const {
    return std::tie(set, level, policy) < std::tie(o.set, o.level, o.policy);
  }
};

// Mean of a per-run value over seeds (NaN values skipped), one row per
// (set, level, policy) in config order, with a column normalized to the
// baseline policy of the same (set, level).
std::string aggregate(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs, const std::string& extra_header,
                      const std::string& extra_value, const std::function<double(const RunOutcome&)>& value) {
  std::map<CellKey, std::pair<double, std::size_t>> acc;
  for (const auto& r : runs) {
    const double v = value(r);
    auto& a = acc[{r.key.set, r.key.level, r.key.policy}];
    if (!std::isnan(v)) {
      a.first += v;
      ++a.second;
    }
  }
  auto mean = [&](const CellKey& k) {
    auto it = acc.find(k);
    if (it == acc.end() || it->second.second == 0) return std::nan("");
    return it->second.first / static_cast<double>(it->second.second);
  };
  std::ostringstream os;
  for (WorkloadSet s : cfg.workload_sets)
    for (QosLevel l : cfg.qos_levels) {
      const double base = mean({s, l, cfg.baseline});
      for (Policy p : cfg.policies) {
        const double m = mean({s, l, p});
        const double norm = (std::isnan(base) || base == 0) ? std::nan("") : m / base;
        os << to_string(s) << ',' << to_string(l) << ',';
        if (!extra_header.empty()) os << extra_value << ',';
        os << to_string(p) << ',' << acc[{s, l, p}].second << ',' << fmt(m) << ',' << fmt(norm) << '\n';
      }
    }
  return os.str();
}

std::string header(const ExperimentConfig& cfg, const std::string& extra) {
  return "workload_set,qos_level," + (extra.empty() ? "" : extra + ",") + "policy,runs,mean,normalized_to_" +
         std::string(to_string(cfg.baseline)) + "\n";
}

}  // namespace

std::string sla_overall_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs) {
  return header(cfg, "") + aggregate(cfg, runs, "", "", [](const RunOutcome& r) { return r.metrics.sla.overall; });
}

std::string sla_by_priority_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs) {
  std::string out = header(cfg, "priority_group");
  for (std::size_t g = 0; g < 3; ++g) {
    const std::string name(to_string(static_cast<PriorityGroup>(g)));
    out += aggregate(cfg, runs, "priority_group", name, [g](const RunOutcome& r) { return r.metrics.sla.by_group[g]; });
  }
  return out;
}

std::string stp_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs) {
  return header(cfg, "") + aggregate(cfg, runs, "", "", [](const RunOutcome& r) { return r.metrics.stp; });
}

std::string fairness_csv(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs) {
  return header(cfg, "") +
         aggregate(cfg, runs, "", "", [](const RunOutcome& r) { return r.metrics.fairness.fairness; });
}

std::vector<fs::path> write_outputs(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << body;
    written.push_back(p);
  };
  put(cfg.output_dir / "results.csv", results_csv(runs));
  put(cfg.output_dir / "metrics.csv", metrics_csv(runs));
  put(cfg.output_dir / "sla_overall.csv", sla_overall_csv(cfg, runs));
  put(cfg.output_dir / "sla_by_priority.csv", sla_by_priority_csv(cfg, runs));
  put(cfg.output_dir / "stp.csv", stp_csv(cfg, runs));
  put(cfg.output_dir / "fairness.csv", fairness_csv(cfg, runs));
  if (cfg.emit_traces) {
    const fs::path dir = cfg.output_dir / "traces";
    fs::create_directories(dir, ec);
    for (const auto& r : runs) {
      std::string stem = key_label(r.key);
      std::replace(stem.begin(), stem.end(), '/', '_');
      put(dir / (stem + "_tiles.csv"), serialize_tile_trace_csv(r.result));
      put(dir / (stem + "_runtime.csv"), serialize_runtime_trace_csv(r.result));
      put(dir / (stem + "_schedule.csv"), serialize_schedule_trace_csv(r.result, r.key.policy));
    }
  }
  return written;
}

std::string estimate_csv(const NetworkDesc& net, const SocConfig& soc, unsigned tiles) {
  const auto est = estimate_network(net, soc, tiles);
  std::ostringstream os;
  os << "layer,kind,compute_ideal_cycles,memory_ideal_cycles,prediction_cycles,total_mem_bytes,from_dram_bytes,"
        "bw_rate\n";
  Bytes total_mem = 0;
  for (std::size_t i = 0; i < est.layers.size(); ++i) {
    const auto& e = est.layers[i];
    total_mem += e.total_mem_bytes;
    os << net.layers[i].name << ',' << (net.layers[i].kind == LayerKind::Compute ? "COMPUTE" : "MEM") << ','
       << fmt(e.compute_ideal_cycles) << ',' << fmt(e.memory_ideal_cycles) << ',' << e.prediction_cycles << ','
       << e.total_mem_bytes << ',' << e.from_dram_bytes << ',' << fmt(e.bw_rate) << '\n';
  }
  os << "TOTAL,," << ",," << est.total_cycles << ',' << total_mem << ',' << est.total_from_dram << ','
     << fmt(est.avg_bw()) << '\n';
  return os.str();
}

std::vector<LayerCheck> cross_check_network(const NetworkDesc& net, const SocConfig& soc, unsigned tiles) {
  SocConfig s = soc;
  s.num_tiles = tiles;
  SimConfig cfg;
  cfg.soc = s;
  cfg.policy = Policy::TimeMux;
  cfg.record_layer_timing = true;
  TaskSpec t;
  t.network = std::make_shared<const NetworkDesc>(net);
  t.qos_target_cycles = 1;
  cfg.scenario.tasks.push_back(t);
  const auto r = run_simulation(cfg);
  const auto& timing = r.tasks.front().layers;
  std::vector<LayerCheck> out;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    LayerCheck c;
    c.network = net.name;
    c.layer = net.layers[i].name;
    c.tiles = tiles;
    c.simulated_cycles = timing.at(i).finish - timing.at(i).start;
    c.predicted_cycles = estimate_layer(net.layers[i], s, tiles).prediction_cycles;
    c.rel_error = std::abs(c.simulated_cycles - static_cast<double>(c.predicted_cycles)) / std::max(1.0, c.simulated_cycles);
    out.push_back(c);
  }
  return out;
}

ValidationReport validate_assets(const fs::path& dir, const SocConfig& soc, std::vector<unsigned> tile_counts,
                                 double tolerance) {
  if (tile_counts.empty())
    for (unsigned t : {1u, 2u, 4u, soc.num_tiles})
      if (t <= soc.num_tiles && std::find(tile_counts.begin(), tile_counts.end(), t) == tile_counts.end())
        tile_counts.push_back(t);
  const auto lib = NetworkLibrary::load_directory(dir, soc);
  if (lib.all().empty()) throw ValidationError("no network descriptions in " + dir.string());
  ValidationReport rep;
  rep.tolerance = tolerance;
  for (const auto& [name, net] : lib.all()) {
    rep.networks.push_back(name);
    LayerCheck worst;
    worst.network = name;
    for (unsigned tiles : tile_counts)
      for (const auto& c : cross_check_network(*net, soc, tiles))
        if (c.rel_error >= worst.rel_error) worst = c;
    rep.max_rel_error = std::max(rep.max_rel_error, worst.rel_error);
    rep.worst_per_network.push_back(worst);
  }
  return rep;
}

}  // namespace moca
