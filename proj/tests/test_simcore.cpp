#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "moca/errors.hpp"
#include "moca/estimator.hpp"
#include "moca/simcore.hpp"

using namespace moca;

namespace {

const NetworkLibrary& lib() {
  static const NetworkLibrary l = NetworkLibrary::load_directory(test::networks_dir());
  return l;
}

unsigned solo_tiles(Policy p, const SocConfig& soc) { return p == Policy::Static ? soc.num_tiles / 4 : soc.num_tiles; }

SimConfig scenario(Policy p, std::uint64_t seed, std::size_t n, WorkloadSet set = WorkloadSet::C) {
  WorkloadParams wp;
  wp.seed = seed;
  wp.n = n;
  wp.set = set;
  wp.allow_any_n = true;
  SimConfig cfg;
  cfg.policy = p;
  cfg.scenario = generate_workload(wp, lib(), cfg.soc);
  return cfg;
}

}  // namespace

TEST_CASE("a lone task finishes near its estimate under every policy") {
  const SocConfig soc;
  for (Policy p : {Policy::Moca, Policy::TimeMux, Policy::Static, Policy::DynCompute}) {
    for (const char* name : {"squeezenet", "resnet50", "kws"}) {
      TaskSpec t;
      t.network = lib().get(name);
      t.qos_target_cycles = 1;
      const double sim = static_cast<double>(run_isolated(t, soc, p));
      const double est = static_cast<double>(estimate_network(*t.network, soc, solo_tiles(p, soc)).total_cycles);
      INFO(to_string(p), " ", name, " sim=", sim, " est=", est);
      CHECK(std::abs(sim - est) / sim <= 0.10);
      CHECK(sim >= 0.9 * est);
    }
  }
}

TEST_CASE("isolated latency ignores the scenario seed") {
  TaskSpec t;
  t.network = lib().get("alexnet");
  t.qos_target_cycles = 1;
  SimConfig a, b;
  a.scenario.seed = 1;
  b.scenario.seed = 99;
  CHECK(run_isolated(t, {}, Policy::Moca, a) == run_isolated(t, {}, Policy::Moca, b));
}

TEST_CASE("identical configs give identical bytes") {
  auto cfg = scenario(Policy::Moca, 5, 20);
  cfg.record_tile_trace = cfg.record_runtime_trace = cfg.record_schedule_trace = true;
  const auto a = run_simulation(cfg), b = run_simulation(cfg);
  CHECK(serialize_tasks_csv(a) == serialize_tasks_csv(b));
  CHECK(serialize_tile_trace_csv(a) == serialize_tile_trace_csv(b));
  CHECK(serialize_runtime_trace_csv(a) == serialize_runtime_trace_csv(b));
  CHECK(serialize_schedule_trace_csv(a, Policy::Moca) == serialize_schedule_trace_csv(b, Policy::Moca));
}

TEST_CASE("every task completes and DRAM capacity holds") {
  for (Policy p : {Policy::Moca, Policy::TimeMux, Policy::Static, Policy::DynCompute}) {
    auto cfg = scenario(p, 2, 15);
    const auto r = run_simulation(cfg);
    INFO(to_string(p));
    REQUIRE(r.tasks.size() == 15);
    CHECK(r.conservation_violations == 0);
    CHECK(r.throttle_violations == 0);
    CHECK(r.max_epoch_dram_served <= static_cast<Bytes>(cfg.soc.dram_bw_bytes_per_cycle * cfg.epoch_cycles));
    for (const auto& t : r.tasks) {
      CHECK(t.finish_cycle >= t.start_cycle);
      CHECK(t.start_cycle >= t.dispatch_cycle);
      CHECK(t.end_to_end_cycles == t.finish_cycle - t.dispatch_cycle);
      CHECK(t.deadline_met == (t.end_to_end_cycles <= t.qos_target_cycles));
      CHECK(t.dram_bytes_served == t.dram_bytes_expected);
    }
  }
}

TEST_CASE("time multiplexing never co-locates") {
  auto cfg = scenario(Policy::TimeMux, 4, 10);
  cfg.record_tile_trace = true;
  const auto r = run_simulation(cfg);
  std::map<Cycle, std::set<long long>> per_epoch;
  for (const auto& row : r.tile_trace)
    if (row.task_id >= 0) per_epoch[row.epoch].insert(row.task_id);
  for (const auto& [epoch, ids] : per_epoch) CHECK(ids.size() <= 1);
}

TEST_CASE("cycle cap aborts") {
  auto cfg = scenario(Policy::Moca, 1, 5);
  cfg.max_cycles = 1000;
  CHECK_THROWS_AS(run_simulation(cfg), SimulationError);
}
