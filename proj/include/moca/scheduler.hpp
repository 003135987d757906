#pragma once

#include <string_view>
#include <vector>

#include "moca/workload.hpp"

namespace moca {

enum class Policy { Moca, TimeMux, Static, DynCompute };

std::string_view to_string(Policy policy);
Policy parse_policy(std::string_view text);

enum class TaskStatus { Waiting, Running, Done };

struct TaskQueueEntry {
  TaskId task_id = 0;
  Cycle dispatch_cycle = 0;
  TaskStatus status = TaskStatus::Waiting;
  int user_priority = 0;
  Cycle qos_target = 0;
  double estimated_total_cycles = 1;  // network estimate at dispatch
  double estimated_avg_bw = 0;        // network DRAM bytes / estimated_total
  double score = 0;
  bool mem_intensive = false;
  double dynamic_score = 0;  // runtime-style score, used by DYN_COMPUTE
};

/// A running task as the baseline policies see it.
struct RunningTaskView {
  TaskId task_id = 0;
  unsigned tiles = 0;
  int user_priority = 0;
  double dynamic_score = 0;     // runtime-style deadline-aware score
  double estimated_avg_bw = 0;
  bool at_layer_boundary = false;  // between layers this epoch
  bool at_block_boundary = false;  // starting a new layer block this epoch
};

struct SchedulerOptions {
  double threshold = 0.0;             // ExQueue admission threshold
  unsigned min_tiles_per_task = 1;    // resourceAvailable: free tiles left for one more member
  bool bandwidth_gate = false;        // also require estimated DRAM headroom
  unsigned static_groups = 4;         // fixed partitions for STATIC
  unsigned max_corunners = 4;         // co-located tasks under DYN_COMPUTE
  // MoCA: at a layer-block boundary, a running task holding more than an even
  // share gives tiles back when admissible tasks are waiting.
  bool moca_rebalance = true;
};

struct SchedulerView {
  Cycle now = 0;
  unsigned num_tiles = 8;
  double dram_bw = 16.0;
  std::vector<unsigned> free_tile_ids;     // ascending
  std::vector<TaskQueueEntry> waiting;     // scored by score_tasks
  std::vector<RunningTaskView> running;    // ascending task id
};

struct Assignment {
  TaskId task_id = 0;
  unsigned tiles = 0;
  std::vector<unsigned> tile_ids;  // explicit placement; empty = any free tiles
};

struct PolicyEvent {
  enum class Kind { Admit, Resize, Preempt, Migration };
  Kind kind = Kind::Admit;
  TaskId task_id = 0;
  unsigned tiles = 0;
};

std::string_view to_string(PolicyEvent::Kind kind);

struct ScheduleDecision {
  std::vector<Assignment> group;    // admissions of waiting tasks
  std::vector<Assignment> resizes;  // new tile counts for running tasks
  std::vector<TaskId> preempted;    // running tasks sent back to the queue
  std::vector<PolicyEvent> policy_events;

  unsigned tiles_assigned() const;
};

/// score = user_priority + waiting / estimated_total; refreshes mem_intensive
/// (estimated_avg_bw > 0.5 x dram_bw). Only WAITING entries are touched.
void score_tasks(std::vector<TaskQueueEntry>& queue, Cycle now, double dram_bw);

/// Descending score, then earlier dispatch, then lower id.
bool schedule_order(const TaskQueueEntry& a, const TaskQueueEntry& b);

/// Group formation: pop the best task above threshold; a memory-intensive
/// pick pulls the best non-memory-intensive task as co-runner. Free tiles are
/// split evenly, remainder to higher scores, at least one each.
ScheduleDecision select_group(const std::vector<TaskQueueEntry>& queue, unsigned free_tiles, double threshold,
                              const SchedulerOptions& opts = {}, double bw_headroom = 0.0);

/// Each candidate gets one tile, the rest is split in proportion to weight
/// by largest remainder (ties to the earlier entry).
std::vector<unsigned> proportional_tiles(const std::vector<double>& weights, unsigned total_tiles);

ScheduleDecision moca_schedule(const SchedulerView& view, const SchedulerOptions& opts);
ScheduleDecision baseline_time_multiplex(const SchedulerView& view, const SchedulerOptions& opts);
ScheduleDecision baseline_static_partition(const SchedulerView& view, const SchedulerOptions& opts);
ScheduleDecision baseline_dynamic_compute(const SchedulerView& view, const SchedulerOptions& opts);

ScheduleDecision schedule(Policy policy, const SchedulerView& view, const SchedulerOptions& opts);

}  // namespace moca
