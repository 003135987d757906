#include "moca/runtime.hpp"

#include <algorithm>
#include <cmath>

namespace moca {

double dynamic_score(const TaskRuntimeState& state, double score_cap) {
  const double prio = static_cast<double>(state.user_priority);
  if (state.slack_cycles <= 0) return prio + score_cap;
  return prio + state.remain_prediction_cycles / state.slack_cycles;
}

PartitionResult detect_and_partition(const LayerEstimate& layer, double own_score,
                                     std::span<const ScoreboardEntry> others, const SocConfig& soc,
                                     unsigned num_tiles, const RuntimeOptions& opts) {
  PartitionResult out;
  out.bw_rate_before = layer.bw_rate;
  out.bw_rate = layer.bw_rate;
  out.prediction_cycles = static_cast<double>(layer.prediction_cycles);

  double other_bw = 0;
  double weight_sum = 0;
  for (const auto& o : others) {
    other_bw += o.demand_bw_rate;
    weight_sum += o.current_score * o.demand_bw_rate;
  }
  out.overflow = layer.bw_rate + other_bw - soc.dram_bw_bytes_per_cycle;
  // A task that alone oversubscribes DRAM has nobody to share with, and a
  // task without DRAM traffic has nothing to throttle.
  if (out.overflow <= 0 || others.empty() || layer.bw_rate <= 0) return out;

  out.contention = true;
  const double own_weight = own_score * layer.bw_rate;
  const double denom = own_weight + weight_sum;
  double share = denom > 0 ? weight_sum / denom
                           : static_cast<double>(others.size()) / static_cast<double>(others.size() + 1);
  if (!opts.literal_multi_corunner_share) share /= static_cast<double>(others.size());
  double floor_rate = static_cast<double>(kRequestBytes) / static_cast<double>(std::max<Cycle>(1, opts.max_window_cycles));
  if (opts.score_share_floor) {
    double score_sum = own_score;
    for (const auto& o : others) score_sum += o.current_score;
    if (score_sum > 0) floor_rate = std::max(floor_rate, soc.dram_bw_bytes_per_cycle * own_score / score_sum);
  }
  floor_rate = std::min(layer.bw_rate, floor_rate);
  out.bw_rate = std::max(layer.bw_rate - out.overflow * share, floor_rate);

  const double from_dram = static_cast<double>(layer.from_dram_bytes);
  out.prediction_cycles = opts.literal_prediction_update ? out.bw_rate * from_dram : from_dram / out.bw_rate;

  const double tiles = static_cast<double>(std::max(1u, num_tiles));
  double window = opts.split_window_by_tiles ? out.prediction_cycles / tiles : out.prediction_cycles;
  double threshold_bytes = static_cast<double>(layer.total_mem_bytes) / tiles;
  const double max_window = static_cast<double>(std::max<Cycle>(1, opts.max_window_cycles));
  if (window > max_window) {
    threshold_bytes *= max_window / window;
    window = max_window;
  }
  const double quantum = static_cast<double>(std::max<Cycle>(1, opts.window_quantum_cycles));
  const double rounded = std::max(quantum, std::ceil(window / quantum - 1e-9) * quantum);
  threshold_bytes *= rounded / window;
  window = rounded;
  out.throttle.window_cycles = std::max<Cycle>(1, static_cast<Cycle>(std::llround(window)));
  out.throttle.threshold_load =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(threshold_bytes / static_cast<double>(kRequestBytes))));
  return out;
}

const ScoreboardEntry* Scoreboard::find(TaskId id) const {
  auto it = rows_.find(id);
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<ScoreboardEntry> Scoreboard::others(TaskId self) const {
  std::vector<ScoreboardEntry> out;
  out.reserve(rows_.size());
  for (const auto& [id, row] : rows_)
    if (id != self) out.push_back(row);
  return out;
}

double Scoreboard::total_current_bw() const {
  double sum = 0;
  for (const auto& [id, row] : rows_) sum += row.current_bw_rate;
  return sum;
}

RuntimeTask MocaRuntime::admit(const TaskSpec& task, unsigned num_tiles) const {
  RuntimeTask rt;
  rt.task_id = task.task_id;
  rt.user_priority = task.user_priority;
  rt.deadline_cycle = task.dispatch_cycle + task.qos_target_cycles;
  rt.remain_prediction_cycles = static_cast<double>(estimate_network(*task.network, soc_, num_tiles).total_cycles);
  return rt;
}

BoundaryOutcome MocaRuntime::on_layer_boundary(RuntimeTask& task, const LayerDesc& next_layer, Cycle now,
                                               std::span<TileState* const> tiles) {
  BoundaryOutcome out;
  const unsigned n = static_cast<unsigned>(std::max<std::size_t>(1, tiles.size()));
  out.estimate = estimate_layer(next_layer, soc_, n);

  TaskRuntimeState state;
  state.remain_prediction_cycles = task.remain_prediction_cycles;
  state.slack_cycles = static_cast<double>(task.deadline_cycle) - static_cast<double>(now);
  state.user_priority = task.user_priority;
  out.score = dynamic_score(state, opts_.score_cap);

  const auto others = board_.others(task.task_id);
  out.partition = detect_and_partition(out.estimate, out.score, others, soc_, n, opts_);

  task.remain_prediction_cycles =
      std::max(0.0, task.remain_prediction_cycles - static_cast<double>(out.estimate.prediction_cycles));
  out.remain_after = task.remain_prediction_cycles;

  board_.update({task.task_id, out.estimate.bw_rate, out.partition.bw_rate, out.score});
  if (!opts_.throttling) out.partition.throttle = {};
  for (TileState* t : tiles) configure_throttle(*t, out.partition.throttle, now, soc_.mem_repartition_cost_cycles);

  if (task.user_priority >= opts_.high_priority_min) {
    const double needed = out.remain_after + out.partition.prediction_cycles;
    if (needed > state.slack_cycles)
      ++task.miss_streak;
    else
      task.miss_streak = 0;
    // One more tile saves about remain / (n + 1) cycles; only worth a
    // migration if that beats its cost.
    const double saving = needed / static_cast<double>(n + 1);
    if (task.miss_streak >= opts_.compute_repartition_streak &&
        saving > static_cast<double>(soc_.compute_repartition_cost_cycles)) {
      out.wants_extra_tile = true;
      task.miss_streak = 0;
    }
  }
  return out;
}

bool MocaRuntime::refresh(const RuntimeTask& task, const LayerDesc& layer, Cycle now,
                          std::span<TileState* const> tiles, BoundaryOutcome* out) {
  BoundaryOutcome o;
  const unsigned n = static_cast<unsigned>(std::max<std::size_t>(1, tiles.size()));
  o.estimate = estimate_layer(layer, soc_, n);
  TaskRuntimeState state;
  state.remain_prediction_cycles = task.remain_prediction_cycles + static_cast<double>(o.estimate.prediction_cycles);
  state.slack_cycles = static_cast<double>(task.deadline_cycle) - static_cast<double>(now);
  state.user_priority = task.user_priority;
  o.score = dynamic_score(state, opts_.score_cap);
  o.partition = detect_and_partition(o.estimate, o.score, board_.others(task.task_id), soc_, n, opts_);
  if (!opts_.throttling) o.partition.throttle = {};
  o.remain_after = task.remain_prediction_cycles;
  board_.update({task.task_id, o.estimate.bw_rate, o.partition.bw_rate, o.score});
  if (out) *out = o;

  bool changed = false;
  for (TileState* t : tiles)
    if (t->throttle.window_cycles != o.partition.throttle.window_cycles ||
        t->throttle.threshold_load != o.partition.throttle.threshold_load)
      changed = true;
  if (!changed) return false;
  for (TileState* t : tiles) configure_throttle(*t, o.partition.throttle, now, soc_.mem_repartition_cost_cycles);
  return true;
}

}  // namespace moca
