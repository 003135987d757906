#pragma once

#include <string>
#include <utility>
#include <vector>

#include "moca/runtime.hpp"
#include "moca/scheduler.hpp"
#include "moca/workload.hpp"

namespace moca {

struct SimConfig {
  SocConfig soc;
  Policy policy = Policy::Moca;
  WorkloadScenario scenario;
  Cycle epoch_cycles = 100;
  Cycle max_cycles = 1'000'000'000;
  RuntimeOptions runtime;
  SchedulerOptions scheduler;
  bool record_epochs = false;         // per-epoch DRAM totals
  bool record_tile_trace = false;     // per-epoch, per-tile rows
  bool record_runtime_trace = false;  // one row per runtime layer-boundary decision
  bool record_schedule_trace = false;
  bool record_layer_timing = false;   // exact start/finish of every layer

  void validate() const;
};

struct LayerTiming {
  double start = 0;   // cycle the layer began issuing work
  double finish = 0;  // exact completion time inside its epoch
};

struct TaskResult {
  TaskId task_id = 0;
  std::string network;
  int priority = 0;
  Cycle dispatch_cycle = 0;
  Cycle start_cycle = 0;
  Cycle finish_cycle = 0;
  Cycle end_to_end_cycles = 0;
  Cycle qos_target_cycles = 0;
  bool deadline_met = false;
  unsigned migrations = 0;          // compute repartitions charged to this task
  unsigned throttle_reconfigs = 0;  // memory repartitions charged to this task
  Cycle migration_cycles = 0;
  Cycle reconfig_cycles = 0;
  Bytes dram_bytes_served = 0;
  Bytes dram_bytes_expected = 0;  // sum of its layers' from_dram
  std::vector<LayerTiming> layers;
};

struct EpochRecord {
  Cycle epoch_start = 0;
  Bytes dram_demanded = 0;
  Bytes dram_served = 0;
  Bytes dram_capacity = 0;
};

struct TileTraceRow {
  Cycle epoch = 0;
  unsigned tile_id = 0;
  long long task_id = -1;  // -1 when idle
  Bytes demanded_bytes = 0;
  Bytes served_bytes = 0;
  bool stalled = false;
};

struct RuntimeTraceRow {
  Cycle cycle = 0;
  TaskId task_id = 0;
  std::size_t layer = 0;
  double score = 0;
  double bw_rate_before = 0;
  double bw_rate_after = 0;
  double overflow = 0;
  Cycle window = 0;
  std::uint64_t threshold_load = 0;
};

struct ScheduleTraceRow {
  Cycle cycle = 0;
  std::string event;
  TaskId task_id = 0;
  unsigned tiles = 0;
  double score = 0;
};

struct SimResult {
  Policy policy = Policy::Moca;
  std::vector<TaskResult> tasks;  // ascending task id
  std::vector<EpochRecord> epochs;
  std::vector<TileTraceRow> tile_trace;
  std::vector<RuntimeTraceRow> runtime_trace;
  std::vector<ScheduleTraceRow> schedule_trace;
  Cycle makespan = 0;
  Bytes max_epoch_dram_served = 0;
  std::uint64_t conservation_violations = 0;
  std::uint64_t throttle_violations = 0;
  std::uint64_t simulated_epochs = 0;
};

SimResult run_simulation(const SimConfig& cfg);

/// End-to-end cycles of `task` running alone under `policy` (its tile
/// allocation and runtime costs, no co-runners): C_single.
Cycle run_isolated(const TaskSpec& task, const SocConfig& soc, Policy policy, const SimConfig& base = {});

struct RepartitionCounts {
  std::uint64_t mem_reconfigs = 0;
  std::uint64_t compute_migrations = 0;
  Cycle migration_cycles = 0;
};

RepartitionCounts count_repartition_events(const SimResult& result);

/// Per-task CSV, fixed formatting; byte-identical for identical runs.
std::string serialize_tasks_csv(const SimResult& result);
std::string serialize_tile_trace_csv(const SimResult& result);
std::string serialize_runtime_trace_csv(const SimResult& result);
std::string serialize_schedule_trace_csv(const SimResult& result, Policy policy);

}  // namespace moca
