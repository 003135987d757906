#pragma once

#include <map>
#include <span>
#include <vector>

#include "moca/accel_hw.hpp"
#include "moca/estimator.hpp"

namespace moca {

struct RuntimeOptions {
  bool throttling = true;    // false: scoreboard only, tiles never throttled (ablation)
  bool refresh_on_change = true;  // re-partition co-runners when the scoreboard changes
  double score_cap = 100.0;  // added to user_priority once slack <= 0
  // Reproduce the literal "Prediction <- BW_rate * From_DRAM" update instead
  // of the dimensionally consistent From_DRAM / BW_rate.
  bool literal_prediction_update = false;
  // Use window = prediction / num_tiles as written. The default uses the
  // full prediction, because the estimate is already taken over all tiles
  // of the task and the split budget would never bind.
  bool split_window_by_tiles = false;
  // Hardware monitoring window. Longer windows are scaled down together
  // with their threshold, preserving the allowed request rate.
  Cycle max_window_cycles = 500;
  // Literal per-task reduction overflow * ws / (cws + ws). With more than one
  // co-runner those shares add up to N - 1 overflows; by default each share
  // is divided by the number of co-runners so the cut totals one overflow.
  bool literal_multi_corunner_share = false;
  // Never cut a task below its score-proportional share of DRAM bandwidth.
  bool score_share_floor = true;
  // Windows are rounded up to a multiple of this (threshold scaled along),
  // so a simulator that rolls windows once per epoch keeps the granted rate.
  Cycle window_quantum_cycles = 1;
  // p-High tasks predicted to miss for this many consecutive layer
  // boundaries ask for one more tile.
  unsigned compute_repartition_streak = 2;
  int high_priority_min = 9;
};

/// One running task as seen by co-runners.
struct ScoreboardEntry {
  TaskId task_id = 0;
  double demand_bw_rate = 0;   // unthrottled rate of its current layer
  double current_bw_rate = 0;  // rate after partitioning
  double current_score = 0;
};

struct TaskRuntimeState {
  double remain_prediction_cycles = 0;  // unexecuted layers, current included
  double slack_cycles = 0;              // deadline - now, may be <= 0
  int user_priority = 0;
};

/// user_priority + remain / slack, or user_priority + score_cap once the
/// deadline has been reached.
double dynamic_score(const TaskRuntimeState& state, double score_cap = 100.0);

struct PartitionResult {
  ThrottleConfig throttle;
  double bw_rate_before = 0;
  double bw_rate = 0;
  double prediction_cycles = 0;
  double overflow = 0;
  bool contention = false;
};

/// Contention detection against co-runners' demand and score-weighted
/// reduction of this task's DRAM rate. `others` must exclude the caller.
PartitionResult detect_and_partition(const LayerEstimate& layer, double own_score,
                                     std::span<const ScoreboardEntry> others, const SocConfig& soc,
                                     unsigned num_tiles, const RuntimeOptions& opts = {});

/// Single-writer table of running tasks, ordered by task id.
class Scoreboard {
 public:
  void update(const ScoreboardEntry& entry) { rows_[entry.task_id] = entry; }
  void remove(TaskId id) { rows_.erase(id); }
  bool contains(TaskId id) const { return rows_.count(id) != 0; }
  const ScoreboardEntry* find(TaskId id) const;
  std::vector<ScoreboardEntry> others(TaskId self) const;
  double total_current_bw() const;
  std::size_t size() const { return rows_.size(); }
  const std::map<TaskId, ScoreboardEntry>& rows() const { return rows_; }

 private:
  std::map<TaskId, ScoreboardEntry> rows_;
};

/// Per-task state the runtime keeps between layer boundaries.
struct RuntimeTask {
  TaskId task_id = 0;
  int user_priority = 0;
  Cycle deadline_cycle = 0;  // dispatch + qos target
  double remain_prediction_cycles = 0;
  unsigned miss_streak = 0;
};

struct BoundaryOutcome {
  LayerEstimate estimate;
  PartitionResult partition;
  double score = 0;
  double remain_after = 0;  // remaining prediction after this layer
  bool wants_extra_tile = false;
};

/// Layer-boundary hook: estimate the next layer, refresh the dynamic score,
/// detect contention, publish the scoreboard row and program every tile of
/// the task. Reconfiguration latency is `soc.mem_repartition_cost_cycles`.
class MocaRuntime {
 public:
  MocaRuntime(const SocConfig& soc, RuntimeOptions opts) : soc_(soc), opts_(opts) {}

  /// Starts tracking a task; remain_prediction is its network estimate on
  /// `num_tiles`.
  RuntimeTask admit(const TaskSpec& task, unsigned num_tiles) const;

  BoundaryOutcome on_layer_boundary(RuntimeTask& task, const LayerDesc& next_layer, Cycle now,
                                    std::span<TileState* const> tiles);

  /// Re-runs detection for a task mid-layer after its co-runners changed.
  /// Tiles are reconfigured only if the throttle setting differs; returns
  /// whether it did.
  bool refresh(const RuntimeTask& task, const LayerDesc& layer, Cycle now, std::span<TileState* const> tiles,
               BoundaryOutcome* out = nullptr);

  void on_task_complete(TaskId id) { board_.remove(id); }

  const Scoreboard& scoreboard() const { return board_; }
  const RuntimeOptions& options() const { return opts_; }

 private:
  SocConfig soc_;
  RuntimeOptions opts_;
  Scoreboard board_;
};

}  // namespace moca
