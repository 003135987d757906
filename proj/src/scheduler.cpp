#include "moca/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moca/errors.hpp"

namespace moca {

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::Moca: return "MOCA";
    case Policy::TimeMux: return "TIME_MUX";
    case Policy::Static: return "STATIC";
    case Policy::DynCompute: return "DYN_COMPUTE";
  }
  return "?";
}

Policy parse_policy(std::string_view text) {
  if (text == "MOCA") return Policy::Moca;
  if (text == "TIME_MUX") return Policy::TimeMux;
  if (text == "STATIC") return Policy::Static;
  if (text == "DYN_COMPUTE") return Policy::DynCompute;
  throw ConfigError("unknown policy '" + std::string(text) + "' (expected MOCA, TIME_MUX, STATIC or DYN_COMPUTE)");
}

std::string_view to_string(PolicyEvent::Kind kind) {
  switch (kind) {
    case PolicyEvent::Kind::Admit: return "admit";
    case PolicyEvent::Kind::Resize: return "resize";
    case PolicyEvent::Kind::Preempt: return "preempt";
    case PolicyEvent::Kind::Migration: return "migration";
  }
  return "?";
}

unsigned ScheduleDecision::tiles_assigned() const {
  unsigned sum = 0;
  for (const auto& a : group) sum += a.tiles;
  return sum;
}

void score_tasks(std::vector<TaskQueueEntry>& queue, Cycle now, double dram_bw) {
  for (auto& t : queue) {
    if (t.status != TaskStatus::Waiting) continue;
    const double waited = now > t.dispatch_cycle ? static_cast<double>(now - t.dispatch_cycle) : 0.0;
    t.score = static_cast<double>(t.user_priority) + waited / std::max(1.0, t.estimated_total_cycles);
    t.mem_intensive = t.estimated_avg_bw > 0.5 * dram_bw;
  }
}

bool schedule_order(const TaskQueueEntry& a, const TaskQueueEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.dispatch_cycle != b.dispatch_cycle) return a.dispatch_cycle < b.dispatch_cycle;
  return a.task_id < b.task_id;
}

namespace {

// Even split, remainder to the better-ranked members, at least one each.
void split_tiles(std::vector<Assignment>& group, const std::vector<TaskQueueEntry>& members, unsigned free_tiles) {
  const unsigned n = static_cast<unsigned>(group.size());
  if (n == 0) return;
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return schedule_order(members[a], members[b]); });
  const unsigned base = free_tiles / n;
  unsigned extra = free_tiles % n;
  for (std::size_t r : rank) {
    group[r].tiles = std::max(1u, base + (extra > 0 ? 1u : 0u));
    if (extra > 0) --extra;
  }
}

}  // namespace

ScheduleDecision select_group(const std::vector<TaskQueueEntry>& queue, unsigned free_tiles, double threshold,
                              const SchedulerOptions& opts, double bw_headroom) {
  ScheduleDecision d;
  if (free_tiles == 0) return d;
  std::vector<TaskQueueEntry> ex;
  for (const auto& t : queue)
    if (t.status == TaskStatus::Waiting && t.score > threshold) ex.push_back(t);
  std::sort(ex.begin(), ex.end(), schedule_order);

  const unsigned max_members = std::max(1u, free_tiles / std::max(1u, opts.min_tiles_per_task));
  std::vector<TaskQueueEntry> members;
  auto take = [&](std::size_t i) {
    members.push_back(ex[i]);
    bw_headroom -= ex[i].estimated_avg_bw;
    ex.erase(ex.begin() + static_cast<std::ptrdiff_t>(i));
  };
  while (members.size() < max_members && !ex.empty()) {
    if (opts.bandwidth_gate && !members.empty() && ex.front().estimated_avg_bw > bw_headroom) break;
    const bool mem_heavy = ex.front().mem_intensive;
    take(0);
    if (mem_heavy && members.size() < max_members) {
      auto co = std::find_if(ex.begin(), ex.end(), [](const TaskQueueEntry& t) { return !t.mem_intensive; });
      if (co != ex.end()) take(static_cast<std::size_t>(co - ex.begin()));
    }
  }
  for (const auto& m : members) d.group.push_back({m.task_id, 0, {}});
  split_tiles(d.group, members, free_tiles);
  for (const auto& a : d.group) d.policy_events.push_back({PolicyEvent::Kind::Admit, a.task_id, a.tiles});
  return d;
}

std::vector<unsigned> proportional_tiles(const std::vector<double>& weights, unsigned total_tiles) {
  const std::size_t n = weights.size();
  std::vector<unsigned> out(n, 0);
  if (n == 0 || total_tiles == 0) return out;
  if (n >= total_tiles) {
    for (std::size_t i = 0; i < total_tiles; ++i) out[i] = 1;
    return out;
  }
  double sum = 0;
  for (double w : weights) sum += std::max(0.0, w);
  const unsigned rest = total_tiles - static_cast<unsigned>(n);
  std::vector<double> frac(n);
  unsigned used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double share = sum > 0 ? rest * std::max(0.0, weights[i]) / sum : static_cast<double>(rest) / n;
    const auto whole = static_cast<unsigned>(std::floor(share + 1e-12));
    out[i] = 1 + whole;
    frac[i] = share - whole;
    used += whole;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t k = 0; used < rest; k = (k + 1) % n, ++used) ++out[order[k]];
  return out;
}

ScheduleDecision moca_schedule(const SchedulerView& view, const SchedulerOptions& opts) {
  auto queue = view.waiting;
  score_tasks(queue, view.now, view.dram_bw);
  double running_bw = 0;
  for (const auto& r : view.running) running_bw += r.estimated_avg_bw;

  unsigned free_tiles = static_cast<unsigned>(view.free_tile_ids.size());
  std::vector<Assignment> shrinks;
  const auto eligible = static_cast<unsigned>(std::count_if(queue.begin(), queue.end(), [&](const TaskQueueEntry& t) {
    return t.status == TaskStatus::Waiting && t.score > opts.threshold;
  }));
  if (opts.moca_rebalance && eligible > 0) {
    const unsigned members = static_cast<unsigned>(view.running.size()) + eligible;
    const unsigned fair = std::max(std::max(1u, opts.min_tiles_per_task), view.num_tiles / members);
    for (const auto& r : view.running) {
      if (!r.at_block_boundary || r.tiles <= fair) continue;
      shrinks.push_back({r.task_id, fair, {}});
      free_tiles += r.tiles - fair;
    }
  }
  auto d = select_group(queue, free_tiles, opts.threshold, opts, view.dram_bw - running_bw);
  for (const auto& a : shrinks) {
    d.resizes.push_back(a);
    d.policy_events.push_back({PolicyEvent::Kind::Resize, a.task_id, a.tiles});
    d.policy_events.push_back({PolicyEvent::Kind::Migration, a.task_id, a.tiles});
  }
  return d;
}

ScheduleDecision baseline_time_multiplex(const SchedulerView& view, const SchedulerOptions&) {
  ScheduleDecision d;
  if (view.waiting.empty()) return d;
  auto queue = view.waiting;
  score_tasks(queue, view.now, view.dram_bw);
  std::sort(queue.begin(), queue.end(), schedule_order);
  if (view.running.empty()) {
    if (view.free_tile_ids.size() < view.num_tiles) return d;
    d.group.push_back({queue.front().task_id, view.num_tiles, {}});
    d.policy_events.push_back({PolicyEvent::Kind::Admit, queue.front().task_id, view.num_tiles});
    return d;
  }
  // Token-style preemption: a strictly higher static priority takes over at
  // the running task's next layer boundary.
  const auto& cur = view.running.front();
  if (!cur.at_layer_boundary) return d;
  auto best = std::min_element(queue.begin(), queue.end(), [](const TaskQueueEntry& a, const TaskQueueEntry& b) {
    if (a.user_priority != b.user_priority) return a.user_priority > b.user_priority;
    return schedule_order(a, b);
  });
  if (best->user_priority <= cur.user_priority) return d;
  d.preempted.push_back(cur.task_id);
  d.group.push_back({best->task_id, view.num_tiles, {}});
  d.policy_events.push_back({PolicyEvent::Kind::Preempt, cur.task_id, cur.tiles});
  d.policy_events.push_back({PolicyEvent::Kind::Migration, best->task_id, view.num_tiles});
  return d;
}

ScheduleDecision baseline_static_partition(const SchedulerView& view, const SchedulerOptions& opts) {
  ScheduleDecision d;
  const unsigned groups = std::max(1u, opts.static_groups);
  if (view.num_tiles % groups != 0) throw ConfigError("static_groups must divide num_tiles");
  const unsigned size = view.num_tiles / groups;
  auto queue = view.waiting;
  score_tasks(queue, view.now, view.dram_bw);
  std::sort(queue.begin(), queue.end(), schedule_order);
  std::size_t next = 0;
  for (unsigned g = 0; g < groups && next < queue.size(); ++g) {
    std::vector<unsigned> ids;
    for (unsigned t = g * size; t < (g + 1) * size; ++t)
      if (std::binary_search(view.free_tile_ids.begin(), view.free_tile_ids.end(), t)) ids.push_back(t);
    if (ids.size() != size) continue;
    d.group.push_back({queue[next].task_id, size, ids});
    d.policy_events.push_back({PolicyEvent::Kind::Admit, queue[next].task_id, size});
    ++next;
  }
  return d;
}

ScheduleDecision baseline_dynamic_compute(const SchedulerView& view, const SchedulerOptions& opts) {
  ScheduleDecision d;
  auto queue = view.waiting;
  score_tasks(queue, view.now, view.dram_bw);
  std::sort(queue.begin(), queue.end(), schedule_order);

  const std::size_t cap = std::min<std::size_t>(std::max(1u, opts.max_corunners), view.num_tiles);
  std::vector<double> weights;
  for (const auto& r : view.running) weights.push_back(1.0 + r.dynamic_score);
  std::size_t admit_count = 0;
  while (view.running.size() + admit_count < cap && admit_count < queue.size()) {
    weights.push_back(1.0 + queue[admit_count].dynamic_score);
    ++admit_count;
  }
  const auto target = proportional_tiles(weights, view.num_tiles);

  unsigned free_tiles = static_cast<unsigned>(view.free_tile_ids.size());
  // Shrink first so the freed tiles can be handed out in the same round.
  for (std::size_t i = 0; i < view.running.size(); ++i) {
    const auto& r = view.running[i];
    if (!r.at_block_boundary || target[i] >= r.tiles) continue;
    d.resizes.push_back({r.task_id, target[i], {}});
    d.policy_events.push_back({PolicyEvent::Kind::Resize, r.task_id, target[i]});
    d.policy_events.push_back({PolicyEvent::Kind::Migration, r.task_id, target[i]});
    free_tiles += r.tiles - target[i];
  }
  for (std::size_t k = 0; k < admit_count && free_tiles > 0; ++k) {
    const unsigned want = std::min(target[view.running.size() + k], free_tiles);
    if (want == 0) continue;
    d.group.push_back({queue[k].task_id, want, {}});
    d.policy_events.push_back({PolicyEvent::Kind::Admit, queue[k].task_id, want});
    free_tiles -= want;
  }
  for (std::size_t i = 0; i < view.running.size() && free_tiles > 0; ++i) {
    const auto& r = view.running[i];
    if (!r.at_block_boundary || target[i] <= r.tiles) continue;
    const unsigned grown = r.tiles + std::min(target[i] - r.tiles, free_tiles);
    free_tiles -= grown - r.tiles;
    d.resizes.push_back({r.task_id, grown, {}});
    d.policy_events.push_back({PolicyEvent::Kind::Resize, r.task_id, grown});
    d.policy_events.push_back({PolicyEvent::Kind::Migration, r.task_id, grown});
  }
  return d;
}

ScheduleDecision schedule(Policy policy, const SchedulerView& view, const SchedulerOptions& opts) {
  switch (policy) {
    case Policy::Moca: return moca_schedule(view, opts);
    case Policy::TimeMux: return baseline_time_multiplex(view, opts);
    case Policy::Static: return baseline_static_partition(view, opts);
    case Policy::DynCompute: return baseline_dynamic_compute(view, opts);
  }
  return {};
}

}  // namespace moca
