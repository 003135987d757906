#include <doctest.h>

#include <numeric>
#include <vector>

#include "moca/errors.hpp"
#include "moca/scheduler.hpp"

using namespace moca;

namespace {

TaskQueueEntry entry(TaskId id, int prio, double est, double bw = 1.0, Cycle dispatch = 0) {
  TaskQueueEntry e;
  e.task_id = id;
  e.user_priority = prio;
  e.estimated_total_cycles = est;
  e.estimated_avg_bw = bw;
  e.dispatch_cycle = dispatch;
  return e;
}

SchedulerView empty_soc(Cycle now = 0) {
  SchedulerView v;
  v.now = now;
  v.free_tile_ids.resize(8);
  std::iota(v.free_tile_ids.begin(), v.free_tile_ids.end(), 0u);
  return v;
}

}  // namespace

TEST_CASE("policy names round-trip") {
  for (Policy p : {Policy::Moca, Policy::TimeMux, Policy::Static, Policy::DynCompute})
    CHECK(parse_policy(to_string(p)) == p);
  CHECK_THROWS_AS(parse_policy("ROUND_ROBIN"), ConfigError);
}

TEST_CASE("task score") {
  std::vector<TaskQueueEntry> q{entry(0, 5, 1000, 9.0), entry(1, 3, 1000, 2.0, 2000)};
  score_tasks(q, 2000, 16.0);
  CHECK(q[0].score == 7.0);
  CHECK(q[0].mem_intensive);
  CHECK(q[1].score == 3.0);
  CHECK_FALSE(q[1].mem_intensive);
}

TEST_CASE("sole compute-bound task takes all free tiles") {
  std::vector<TaskQueueEntry> q{entry(0, 4, 1000)};
  score_tasks(q, 0, 16);
  const auto d = select_group(q, 8, 0.0);
  REQUIRE(d.group.size() == 1);
  CHECK(d.group[0].task_id == 0);
  CHECK(d.group[0].tiles == 8);
}

TEST_CASE("memory-intensive pick pulls a compute-bound partner") {
  SchedulerOptions opts;
  opts.min_tiles_per_task = 4;  // room for exactly two members
  std::vector<TaskQueueEntry> q{entry(0, 9, 1000, 12), entry(1, 8, 1000, 12), entry(2, 7, 1000, 1)};
  score_tasks(q, 0, 16);
  const auto d = select_group(q, 8, 0.0, opts);
  REQUIRE(d.group.size() == 2);
  CHECK(d.group[0].task_id == 0);
  CHECK(d.group[1].task_id == 2);
  CHECK(d.tiles_assigned() == 8);
}

TEST_CASE("tasks below threshold wait until their score grows") {
  std::vector<TaskQueueEntry> q{entry(0, 0, 1000)};
  score_tasks(q, 0, 16);
  CHECK(select_group(q, 8, 5.0).group.empty());
  score_tasks(q, 4000, 16);
  CHECK(select_group(q, 8, 5.0).group.empty());
  score_tasks(q, 6000, 16);
  CHECK(select_group(q, 8, 5.0).group.size() == 1);
}

TEST_CASE("proportional tiles") {
  CHECK(proportional_tiles({1, 1}, 8) == std::vector<unsigned>{4, 4});
  CHECK(proportional_tiles({3, 1}, 8) == std::vector<unsigned>{6, 2});
  CHECK(proportional_tiles({1, 1, 1}, 8) == std::vector<unsigned>{3, 3, 2});
  CHECK(proportional_tiles({5, 1}, 8) == std::vector<unsigned>{6, 2});
  const auto many = proportional_tiles(std::vector<double>(10, 1.0), 8);
  CHECK(std::accumulate(many.begin(), many.end(), 0u) == 8);
}

TEST_CASE("MoCA shrinks a wide runner at a block boundary when work waits") {
  auto v = empty_soc();
  v.free_tile_ids.clear();
  v.running.push_back({7, 8, 2, 0, 1.0, true, true});
  v.waiting = {entry(1, 3, 1000)};
  const auto d = moca_schedule(v, {});
  REQUIRE(d.resizes.size() == 1);
  CHECK(d.resizes[0].tiles == 4);
  REQUIRE(d.group.size() == 1);
  CHECK(d.group[0].tiles == 4);

  v.running[0].at_block_boundary = false;
  CHECK(moca_schedule(v, {}).group.empty());
}

TEST_CASE("time multiplexing runs one task on the whole SoC") {
  auto v = empty_soc();
  v.waiting = {entry(0, 1, 1000), entry(1, 6, 1000)};
  const auto d = baseline_time_multiplex(v, {});
  REQUIRE(d.group.size() == 1);
  CHECK(d.group[0].task_id == 1);
  CHECK(d.group[0].tiles == 8);

  auto busy = empty_soc();
  busy.free_tile_ids.clear();
  busy.running.push_back({3, 8, 2, 0, 1, true, false});
  busy.waiting = {entry(4, 9, 1000)};
  const auto p = baseline_time_multiplex(busy, {});
  CHECK(p.preempted == std::vector<TaskId>{3});
  CHECK(p.group.at(0).task_id == 4);
}

TEST_CASE("static partitions are fixed groups of two tiles") {
  auto v = empty_soc();
  v.waiting = {entry(0, 1, 1000), entry(1, 2, 1000), entry(2, 3, 1000)};
  const auto d = baseline_static_partition(v, {});
  REQUIRE(d.group.size() == 3);
  CHECK(d.group[0].task_id == 2);
  CHECK(d.group[0].tile_ids == std::vector<unsigned>{0, 1});
  CHECK(d.group[2].tile_ids == std::vector<unsigned>{4, 5});

  SchedulerOptions bad;
  bad.static_groups = 3;
  CHECK_THROWS_AS(baseline_static_partition(v, bad), ConfigError);
}

TEST_CASE("dynamic compute admits up to the co-runner cap") {
  auto v = empty_soc();
  for (TaskId i = 0; i < 6; ++i) v.waiting.push_back(entry(i, 1, 1000));
  const auto d = baseline_dynamic_compute(v, {});
  CHECK(d.group.size() == 4);
  CHECK(d.tiles_assigned() == 8);
}
