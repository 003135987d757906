#include "moca/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "moca/accel_hw.hpp"
#include "moca/errors.hpp"
#include "moca/estimator.hpp"

namespace moca {

void SimConfig::validate() const {
  soc.validate();
  if (epoch_cycles == 0) throw ConfigError("epoch_cycles must be >= 1");
  if (max_cycles == 0) throw ConfigError("max_cycles must be > 0");
  for (const auto& t : scenario.tasks) t.validate();
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Double-buffered load/execute pipeline of one layer. The layer is cut into
// `chunks` equal pieces; chunk k computes once it is loaded, and chunk k+2
// may only start loading after chunk k has been consumed. Memory work is
// measured in uncontended memory cycles, so an unthrottled loader advances
// one unit per cycle and an uncontended layer takes max + min / chunks.
struct LayerPipeline {
  unsigned chunks = 1;
  double mem_total = 0;
  double mac_total = 0;
  double dram_per_mem = 0;     // DRAM bytes per memory cycle
  double traffic_per_mem = 0;  // L2 bytes per memory cycle
  unsigned load_chunk = 0;
  double load_progress = 0;
  unsigned comp_chunk = 0;
  double comp_progress = 0;

  double mem_chunk() const { return mem_total / chunks; }
  double mac_chunk() const { return mac_total / chunks; }
  bool done() const { return load_chunk >= chunks && comp_chunk >= chunks; }
  bool load_ready() const { return load_chunk < chunks && load_chunk <= comp_chunk + 1; }
  bool comp_ready() const { return comp_chunk < chunks && comp_chunk < load_chunk; }
  double remaining_mem() const {
    return std::max(0.0, mem_total - load_chunk * mem_chunk() - (load_chunk < chunks ? load_progress : 0.0));
  }
};

struct Advance {
  double mem_used = 0;
  bool finished = false;
  double finish_time = 0;
};

Advance advance(LayerPipeline& p, double t0, double t1, double mem_budget, double mac_rate) {
  Advance res;
  const double mc = p.mem_chunk(), wc = p.mac_chunk();
  const double eps_m = 1e-9 * std::max(1.0, mc), eps_w = 1e-9 * std::max(1.0, wc);
  double t = t0;
  for (;;) {
    for (bool moved = true; moved;) {
      moved = false;
      if (p.load_ready() && mc - p.load_progress <= eps_m) {
        ++p.load_chunk;
        p.load_progress = 0;
        moved = true;
      }
      if (p.comp_ready() && wc - p.comp_progress <= eps_w) {
        ++p.comp_chunk;
        p.comp_progress = 0;
        moved = true;
      }
    }
    if (p.done()) {
      res.finished = true;
      res.finish_time = t;
      return res;
    }
    if (t >= t1) return res;
    const bool load_on = p.load_ready() && mem_budget > 1e-12;
    const bool comp_on = p.comp_ready() && mac_rate > 0;
    if (!load_on && !comp_on) return res;
    double dt = t1 - t;
    if (load_on) dt = std::min({dt, mc - p.load_progress, mem_budget});
    if (comp_on) dt = std::min(dt, (wc - p.comp_progress) / mac_rate);
    if (load_on) {
      p.load_progress += dt;
      mem_budget -= dt;
      res.mem_used += dt;
    }
    if (comp_on) p.comp_progress += dt * mac_rate;
    t += dt;
  }
}

LayerPipeline make_pipeline(const LayerDesc& layer, const SocConfig& soc) {
  const auto e = estimate_layer(layer, soc, 1);
  LayerPipeline p;
  p.chunks = std::max(1u, soc.pipeline_chunks);
  p.mem_total = e.memory_ideal_cycles;
  p.mac_total = static_cast<double>(layer.total_mac);
  if (p.mem_total > 0) {
    p.dram_per_mem = static_cast<double>(e.from_dram_bytes) / p.mem_total;
    p.traffic_per_mem = static_cast<double>(e.total_mem_bytes) / p.mem_total;
  }
  return p;
}

struct NetworkInfo {
  double est_total = 1;
  double est_avg_bw = 0;
  std::vector<double> suffix;  // remaining prediction from layer i on, full SoC
  std::vector<std::size_t> blocks;
  Bytes from_dram = 0;
};

struct LiveTask {
  const TaskSpec* spec = nullptr;
  const NetworkInfo* info = nullptr;
  TaskStatus status = TaskStatus::Waiting;
  bool arrived = false;
  bool started = false;
  std::vector<unsigned> tiles;
  std::size_t layer = 0;
  LayerPipeline pipe;
  bool layer_active = false;
  bool layer_finished = false;
  bool at_layer_boundary = false;
  bool at_block_boundary = false;
  double finish_exact = 0;
  double busy_until = 0;
  double dram_consumed = 0;
  RuntimeTask rt;
  TaskResult result;
};

SimConfig with_quantum(SimConfig cfg) {
  cfg.runtime.window_quantum_cycles = std::max(cfg.runtime.window_quantum_cycles, cfg.epoch_cycles);
  return cfg;
}

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg)
      : cfg_(with_quantum(cfg)), soc_(cfg.soc), mem_(cfg.soc, cfg.epoch_cycles), runtime_(cfg.soc, cfg_.runtime) {
    cfg_.validate();
    tiles_.resize(soc_.num_tiles);
    for (unsigned i = 0; i < soc_.num_tiles; ++i) tiles_[i].tile_id = i;

    const auto& specs = cfg_.scenario.tasks;
    tasks_.resize(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
      auto& t = tasks_[i];
      t.spec = &specs[i];
      t.info = &info_for(*specs[i].network);
      t.result.task_id = specs[i].task_id;
      t.result.network = specs[i].network->name;
      t.result.priority = specs[i].user_priority;
      t.result.dispatch_cycle = specs[i].dispatch_cycle;
      t.result.qos_target_cycles = specs[i].qos_target_cycles;
      t.result.dram_bytes_expected = t.info->from_dram;
      arrival_order_.push_back(i);
    }
    std::stable_sort(arrival_order_.begin(), arrival_order_.end(), [&](std::size_t a, std::size_t b) {
      if (specs[a].dispatch_cycle != specs[b].dispatch_cycle) return specs[a].dispatch_cycle < specs[b].dispatch_cycle;
      return specs[a].task_id < specs[b].task_id;
    });
    result_.policy = cfg_.policy;
  }

  SimResult run() {
    const Cycle epoch = cfg_.epoch_cycles;
    std::size_t done = 0;
    Cycle now = 0;
    while (done < tasks_.size()) {
      if (now > cfg_.max_cycles) abort_cap(now);
      bool event = admit_arrivals(now);
      std::vector<std::size_t> starting;
      event |= process_boundaries(now, starting, done);
      if (done == tasks_.size()) break;
      if (event || needs_scheduling()) apply_decision(now, starting);
      start_layers(now, starting);
      if (board_changed_) refresh_corunners(now, starting);

      if (running_count() == 0) {
        if (!any_waiting()) {
          if (next_arrival_ >= arrival_order_.size()) break;
          const Cycle next = tasks_[arrival_order_[next_arrival_]].spec->dispatch_cycle;
          now = std::max(now + epoch, (next + epoch - 1) / epoch * epoch);
          continue;
        }
        now += epoch;
        continue;
      }
      run_epoch(now);
      now += epoch;
    }
    for (auto& t : tasks_) result_.tasks.push_back(std::move(t.result));
    std::sort(result_.tasks.begin(), result_.tasks.end(),
              [](const TaskResult& a, const TaskResult& b) { return a.task_id < b.task_id; });
    return std::move(result_);
  }

 private:
  const NetworkInfo& info_for(const NetworkDesc& net) {
    auto it = infos_.find(&net);
    if (it != infos_.end()) return it->second;
    NetworkInfo info;
    const auto est = estimate_network(net, soc_, soc_.num_tiles);
    info.est_total = static_cast<double>(std::max<Cycle>(1, est.total_cycles));
    info.est_avg_bw = est.avg_bw();
    info.from_dram = est.total_from_dram;
    info.suffix.assign(est.layers.size() + 1, 0.0);
    for (std::size_t i = est.layers.size(); i-- > 0;)
      info.suffix[i] = info.suffix[i + 1] + static_cast<double>(est.layers[i].prediction_cycles);
    info.blocks = layer_blocks(net, soc_, soc_.num_tiles);
    return infos_.emplace(&net, std::move(info)).first->second;
  }

  std::size_t index_of(TaskId id) const {
    for (std::size_t i = 0; i < tasks_.size(); ++i)
      if (tasks_[i].spec->task_id == id) return i;
    throw SimulationError("unknown task id " + std::to_string(id));
  }

  std::size_t running_count() const {
    return static_cast<std::size_t>(
        std::count_if(tasks_.begin(), tasks_.end(), [](const LiveTask& t) { return t.status == TaskStatus::Running; }));
  }
  bool any_waiting() const {
    return std::any_of(tasks_.begin(), tasks_.end(),
                       [](const LiveTask& t) { return t.arrived && t.status == TaskStatus::Waiting; });
  }
  std::vector<unsigned> free_tiles() const {
    std::vector<unsigned> out;
    for (const auto& t : tiles_)
      if (!t.assigned_task) out.push_back(t.tile_id);
    return out;
  }
  bool needs_scheduling() const {
    if (!any_waiting()) return false;
    if (!free_tiles().empty()) return true;
    return std::any_of(tasks_.begin(), tasks_.end(), [](const LiveTask& t) {
      return t.status == TaskStatus::Running && t.at_layer_boundary;
    });
  }

  double running_score(const LiveTask& t, Cycle now) const {
    TaskRuntimeState s;
    s.remain_prediction_cycles = t.info->suffix[std::min(t.layer, t.info->suffix.size() - 1)];
    s.slack_cycles = static_cast<double>(t.spec->dispatch_cycle + t.spec->qos_target_cycles) - static_cast<double>(now);
    s.user_priority = t.spec->user_priority;
    return dynamic_score(s, cfg_.runtime.score_cap);
  }

  void trace_schedule(Cycle now, std::string_view ev, const LiveTask& t, double score = 0) {
    if (!cfg_.record_schedule_trace) return;
    result_.schedule_trace.push_back(
        {now, std::string(ev), t.spec->task_id, static_cast<unsigned>(t.tiles.size()), score});
  }

  bool admit_arrivals(Cycle now) {
    bool any = false;
    while (next_arrival_ < arrival_order_.size() && tasks_[arrival_order_[next_arrival_]].spec->dispatch_cycle <= now) {
      auto& t = tasks_[arrival_order_[next_arrival_++]];
      t.arrived = true;
      t.status = TaskStatus::Waiting;
      trace_schedule(now, "arrive", t);
      any = true;
    }
    return any;
  }

  void release_tiles(LiveTask& t) {
    for (unsigned id : t.tiles) {
      auto& tile = tiles_[id];
      tile.assigned_task.reset();
      configure_throttle(tile, {}, 0, 0);
      tile.stalled = false;
    }
    t.tiles.clear();
  }

  bool process_boundaries(Cycle now, std::vector<std::size_t>& starting, std::size_t& done) {
    bool event = false;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      auto& t = tasks_[i];
      t.at_layer_boundary = t.at_block_boundary = false;
      if (t.status != TaskStatus::Running || !t.layer_finished) continue;
      t.layer_finished = false;
      t.layer_active = false;
      ++t.layer;
      const auto& layers = t.spec->network->layers;
      if (t.layer >= layers.size()) {
        t.status = TaskStatus::Done;
        t.result.finish_cycle = static_cast<Cycle>(std::ceil(t.finish_exact - 1e-9));
        t.result.end_to_end_cycles = t.result.finish_cycle - t.result.dispatch_cycle;
        t.result.deadline_met = t.result.end_to_end_cycles <= t.result.qos_target_cycles;
        t.result.dram_bytes_served = static_cast<Bytes>(std::llround(t.dram_consumed));
        result_.makespan = std::max(result_.makespan, t.result.finish_cycle);
        trace_schedule(now, "complete", t);
        release_tiles(t);
        if (cfg_.policy == Policy::Moca) {
          runtime_.on_task_complete(t.spec->task_id);
          board_changed_ = true;
        }
        ++done;
        event = true;
        continue;
      }
      t.at_layer_boundary = true;
      if (t.info->blocks[t.layer] != t.info->blocks[t.layer - 1]) {
        t.at_block_boundary = true;
        event = true;
      }
      starting.push_back(i);
    }
    return event;
  }

  SchedulerView build_view(Cycle now) const {
    SchedulerView v;
    v.now = now;
    v.num_tiles = soc_.num_tiles;
    v.dram_bw = soc_.dram_bw_bytes_per_cycle;
    v.free_tile_ids = free_tiles();
    for (const auto& t : tasks_) {
      if (t.status == TaskStatus::Running) {
        RunningTaskView r;
        r.task_id = t.spec->task_id;
        r.tiles = static_cast<unsigned>(t.tiles.size());
        r.user_priority = t.spec->user_priority;
        r.dynamic_score = running_score(t, now);
        r.estimated_avg_bw = t.info->est_avg_bw;
        r.at_layer_boundary = t.at_layer_boundary;
        r.at_block_boundary = t.at_block_boundary;
        v.running.push_back(r);
      } else if (t.arrived && t.status == TaskStatus::Waiting) {
        TaskQueueEntry e;
        e.task_id = t.spec->task_id;
        e.dispatch_cycle = t.spec->dispatch_cycle;
        e.user_priority = t.spec->user_priority;
        e.qos_target = t.spec->qos_target_cycles;
        e.estimated_total_cycles = t.info->est_total;
        e.estimated_avg_bw = t.info->est_avg_bw;
        e.dynamic_score = running_score(t, now);
        v.waiting.push_back(e);
      }
    }
    std::sort(v.running.begin(), v.running.end(),
              [](const RunningTaskView& a, const RunningTaskView& b) { return a.task_id < b.task_id; });
    return v;
  }

  void take_tiles(LiveTask& t, unsigned count, const std::vector<unsigned>& explicit_ids) {
    std::vector<unsigned> ids = explicit_ids;
    if (ids.empty()) {
      for (const auto& tile : tiles_) {
        if (ids.size() == count) break;
        if (!tile.assigned_task) ids.push_back(tile.tile_id);
      }
    }
    if (ids.size() != count) throw SimulationError("tile conservation: not enough free tiles for task " +
                                                   std::to_string(t.spec->task_id));
    for (unsigned id : ids) {
      if (tiles_.at(id).assigned_task) throw SimulationError("tile conservation: tile " + std::to_string(id) + " double-booked");
      tiles_[id].assigned_task = t.spec->task_id;
      t.tiles.push_back(id);
    }
    std::sort(t.tiles.begin(), t.tiles.end());
  }

  void shrink_tiles(LiveTask& t, unsigned count) {
    while (t.tiles.size() > count) {
      auto& tile = tiles_[t.tiles.back()];
      tile.assigned_task.reset();
      configure_throttle(tile, {}, 0, 0);
      t.tiles.pop_back();
    }
  }

  void charge_migration(LiveTask& t, Cycle now) {
    const Cycle cost = soc_.compute_repartition_cost_cycles;
    t.busy_until = std::max(t.busy_until, static_cast<double>(now)) + static_cast<double>(cost);
    ++t.result.migrations;
    t.result.migration_cycles += cost;
    trace_schedule(now, "migration", t);
  }

  void apply_decision(Cycle now, std::vector<std::size_t>& starting) {
    const auto view = build_view(now);
    if (view.waiting.empty() && std::none_of(view.running.begin(), view.running.end(),
                                             [](const RunningTaskView& r) { return r.at_block_boundary; }))
      return;
    const auto d = schedule(cfg_.policy, view, cfg_.scheduler);

    for (TaskId id : d.preempted) {
      auto& t = tasks_[index_of(id)];
      release_tiles(t);
      t.status = TaskStatus::Waiting;
      starting.erase(std::remove(starting.begin(), starting.end(), index_of(id)), starting.end());
      trace_schedule(now, "preempt", t);
    }
    for (const auto& r : d.resizes) {
      auto& t = tasks_[index_of(r.task_id)];
      if (r.tiles < t.tiles.size()) shrink_tiles(t, r.tiles);
    }
    for (const auto& a : d.group) {
      const std::size_t idx = index_of(a.task_id);
      auto& t = tasks_[idx];
      if (t.status != TaskStatus::Waiting || !t.arrived) throw SimulationError("scheduler admitted a non-waiting task");
      take_tiles(t, a.tiles, a.tile_ids);
      t.status = TaskStatus::Running;
      if (!t.started) {
        t.started = true;
        t.result.start_cycle = now;
        if (cfg_.policy == Policy::Moca) t.rt = runtime_.admit(*t.spec, static_cast<unsigned>(t.tiles.size()));
      }
      t.layer_active = false;
      starting.push_back(idx);
      trace_schedule(now, "admit", t);
    }
    for (const auto& r : d.resizes) {
      auto& t = tasks_[index_of(r.task_id)];
      if (r.tiles > t.tiles.size()) take_tiles(t, r.tiles - static_cast<unsigned>(t.tiles.size()), {});
      trace_schedule(now, "resize", t);
    }
    for (const auto& ev : d.policy_events)
      if (ev.kind == PolicyEvent::Kind::Migration) charge_migration(tasks_[index_of(ev.task_id)], now);

    check_tile_conservation();
    std::sort(starting.begin(), starting.end());
    starting.erase(std::unique(starting.begin(), starting.end()), starting.end());
  }

  void check_tile_conservation() const {
    std::vector<int> owner(tiles_.size(), 0);
    for (const auto& t : tasks_) {
      if (t.status != TaskStatus::Running && !t.tiles.empty())
        throw SimulationError("task " + std::to_string(t.spec->task_id) + " holds tiles while not running");
      if (t.status == TaskStatus::Running && t.tiles.empty())
        throw SimulationError("task " + std::to_string(t.spec->task_id) + " running without tiles");
      for (unsigned id : t.tiles)
        if (++owner[id] > 1) throw SimulationError("tile " + std::to_string(id) + " assigned twice");
    }
  }

  std::vector<TileState*> tile_ptrs(const LiveTask& t) {
    std::vector<TileState*> out;
    for (unsigned id : t.tiles) out.push_back(&tiles_[id]);
    return out;
  }

  void start_layers(Cycle now, const std::vector<std::size_t>& starting) {
    for (std::size_t idx : starting) {
      auto& t = tasks_[idx];
      if (t.status != TaskStatus::Running) continue;
      const auto& layer = t.spec->network->layers[t.layer];
      t.pipe = make_pipeline(layer, soc_);
      t.layer_active = true;
      if (cfg_.policy == Policy::Moca) {
        const auto ptrs = tile_ptrs(t);
        const auto out = runtime_.on_layer_boundary(t.rt, layer, now, ptrs);
        board_changed_ = true;
        // The task itself is held for the reconfiguration cost, so windows can
        // stay aligned with epochs.
        for (TileState* tile : ptrs) tile->window_start_cycle = now;
        const Cycle cost = soc_.mem_repartition_cost_cycles;
        t.busy_until = std::max(t.busy_until, static_cast<double>(now)) + static_cast<double>(cost);
        ++t.result.throttle_reconfigs;
        t.result.reconfig_cycles += cost;
        if (cfg_.record_runtime_trace)
          result_.runtime_trace.push_back({now, t.spec->task_id, t.layer, out.score, out.partition.bw_rate_before,
                                           out.partition.bw_rate, out.partition.overflow,
                                           out.partition.throttle.window_cycles, out.partition.throttle.threshold_load});
        if (out.wants_extra_tile) grant_extra_tile(t, now, out.partition.throttle);
      }
      if (cfg_.record_layer_timing) t.result.layers.push_back({std::max(t.busy_until, static_cast<double>(now)), 0.0});
    }
  }

  // Co-runners mid-layer see the new scoreboard; only tasks whose throttle
  // setting actually changes pay the reconfiguration cost.
  void refresh_corunners(Cycle now, const std::vector<std::size_t>& starting) {
    board_changed_ = false;
    if (cfg_.policy != Policy::Moca || !cfg_.runtime.refresh_on_change) return;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      auto& t = tasks_[i];
      if (t.status != TaskStatus::Running || !t.layer_active || t.layer_finished) continue;
      if (std::find(starting.begin(), starting.end(), i) != starting.end()) continue;
      const auto ptrs = tile_ptrs(t);
      BoundaryOutcome out;
      if (!runtime_.refresh(t.rt, t.spec->network->layers[t.layer], now, ptrs, &out)) continue;
      for (TileState* tile : ptrs) tile->window_start_cycle = now;
      const Cycle cost = soc_.mem_repartition_cost_cycles;
      t.busy_until = std::max(t.busy_until, static_cast<double>(now)) + static_cast<double>(cost);
      ++t.result.throttle_reconfigs;
      t.result.reconfig_cycles += cost;
      if (cfg_.record_runtime_trace)
        result_.runtime_trace.push_back({now, t.spec->task_id, t.layer, out.score, out.partition.bw_rate_before,
                                         out.partition.bw_rate, out.partition.overflow,
                                         out.partition.throttle.window_cycles, out.partition.throttle.threshold_load});
    }
  }

  // Rare compute repartition: one idle tile, else one tile from the
  // lowest-scored co-runner that has more than one.
  void grant_extra_tile(LiveTask& t, Cycle now, const ThrottleConfig& cfg) {
    if (t.tiles.size() >= soc_.num_tiles) return;
    const auto free = free_tiles();
    if (free.empty()) {
      LiveTask* donor = nullptr;
      double donor_score = kInf;
      for (auto& o : tasks_) {
        if (&o == &t || o.status != TaskStatus::Running || o.tiles.size() < 2) continue;
        const auto* row = runtime_.scoreboard().find(o.spec->task_id);
        const double s = row ? row->current_score : 0.0;
        if (s < donor_score) {
          donor_score = s;
          donor = &o;
        }
      }
      if (!donor) return;
      shrink_tiles(*donor, static_cast<unsigned>(donor->tiles.size() - 1));
    }
    take_tiles(t, 1, {});
    for (unsigned id : t.tiles) configure_throttle(tiles_[id], cfg, now, 0);
    charge_migration(t, now);
    check_tile_conservation();
  }

  void run_epoch(Cycle now) {
    const double t0 = static_cast<double>(now);
    const double t1 = t0 + static_cast<double>(cfg_.epoch_cycles);
    for (auto& tile : tiles_) tile.roll_window(now);

    struct Work {
      std::size_t task;
      double start;
      double mac_rate;
      std::size_t first_request;
      double traffic_cap;  // n x the smallest throttle headroom among its tiles
    };
    std::vector<Work> work;
    std::vector<TileRequest> requests;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      auto& t = tasks_[i];
      if (t.status != TaskStatus::Running || !t.layer_active || t.layer_finished) continue;
      const double start = std::max(t0, t.busy_until);
      if (start >= t1) continue;
      const double mac_rate = static_cast<double>(soc_.pes_per_tile) * static_cast<double>(t.tiles.size());
      LayerPipeline probe = t.pipe;
      const double wanted = advance(probe, start, t1, kInf, mac_rate).mem_used;

      const double n = static_cast<double>(t.tiles.size());
      TileWork remaining{t.pipe.remaining_mem() * t.pipe.dram_per_mem / n,
                         t.pipe.remaining_mem() * t.pipe.traffic_per_mem / n, 0};
      TileWork capacity{wanted * t.pipe.dram_per_mem / n, wanted * t.pipe.traffic_per_mem / n, 0};
      const Cycle issue_at = static_cast<Cycle>(std::ceil(start));
      double headroom = kInf;
      for (unsigned id : t.tiles) headroom = std::min(headroom, tiles_[id].headroom_bytes(issue_at));
      work.push_back({i, start, mac_rate, requests.size(), headroom * n});
      for (unsigned id : t.tiles) {
        const auto dem = tile_demand(tiles_[id], remaining, capacity, issue_at);
        requests.push_back({id, dem.dram_bytes, dem.l2_bytes});
      }
    }

    const auto grants = mem_.serve(requests);
    Bytes demanded = 0, served = 0;
    for (std::size_t k = 0; k < requests.size(); ++k) {
      demanded += requests[k].dram_bytes;
      served += grants[k].dram_bytes;
    }
    if (served > mem_.dram_capacity_per_epoch()) ++result_.conservation_violations;
    result_.max_epoch_dram_served = std::max(result_.max_epoch_dram_served, served);
    ++result_.simulated_epochs;
    if (cfg_.record_epochs) result_.epochs.push_back({now, demanded, served, mem_.dram_capacity_per_epoch()});

    for (const auto& w : work) {
      auto& t = tasks_[w.task];
      const std::size_t n = t.tiles.size();
      double dram = 0, l2 = 0;
      for (std::size_t k = 0; k < n; ++k) {
        dram += static_cast<double>(grants[w.first_request + k].dram_bytes);
        l2 += static_cast<double>(grants[w.first_request + k].l2_bytes);
      }
      double budget = kInf;
      if (t.pipe.dram_per_mem > 0) budget = std::min(budget, dram / t.pipe.dram_per_mem);
      if (t.pipe.traffic_per_mem > 0) budget = std::min(budget, std::min(l2, w.traffic_cap) / t.pipe.traffic_per_mem);
      const auto adv = advance(t.pipe, w.start, t1, budget, w.mac_rate);
      t.dram_consumed += adv.mem_used * t.pipe.dram_per_mem;

      const double traffic_per_tile = adv.mem_used * t.pipe.traffic_per_mem / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        auto& tile = tiles_[t.tiles[k]];
        tile.record_bytes(traffic_per_tile);
        if (tile.throttle.enabled() && tile.access_counter > tile.throttle.threshold_load)
          ++result_.throttle_violations;
        if (cfg_.record_tile_trace)
          result_.tile_trace.push_back({now, tile.tile_id, static_cast<long long>(t.spec->task_id),
                                        requests[w.first_request + k].dram_bytes,
                                        grants[w.first_request + k].dram_bytes, tile.stalled});
      }
      if (adv.finished) {
        t.layer_finished = true;
        t.finish_exact = adv.finish_time;
        if (cfg_.record_layer_timing && !t.result.layers.empty()) t.result.layers.back().finish = adv.finish_time;
      }
    }
    if (cfg_.record_tile_trace) {
      for (const auto& tile : tiles_)
        if (!tile.assigned_task) result_.tile_trace.push_back({now, tile.tile_id, -1, 0, 0, false});
    }
  }

  [[noreturn]] void abort_cap(Cycle now) const {
    std::ostringstream os;
    os << "cycle cap " << cfg_.max_cycles << " exceeded at cycle " << now;
    for (const auto& t : tasks_) {
      if (t.status == TaskStatus::Done) continue;
      os << "; stuck task " << t.spec->task_id << " (" << t.spec->network->name << ", layer " << t.layer
         << ", " << (t.status == TaskStatus::Running ? "running" : "waiting") << ")";
      break;
    }
    throw SimulationError(os.str());
  }

  SimConfig cfg_;
  SocConfig soc_;
  MemorySystem mem_;
  MocaRuntime runtime_;
  std::vector<TileState> tiles_;
  std::vector<LiveTask> tasks_;
  std::vector<std::size_t> arrival_order_;
  std::size_t next_arrival_ = 0;
  bool board_changed_ = false;
  std::map<const NetworkDesc*, NetworkInfo> infos_;
  SimResult result_;
};

}  // namespace

SimResult run_simulation(const SimConfig& cfg) { return Simulator(cfg).run(); }

Cycle run_isolated(const TaskSpec& task, const SocConfig& soc, Policy policy, const SimConfig& base) {
  SimConfig cfg = base;
  cfg.soc = soc;
  cfg.policy = policy;
  cfg.record_epochs = cfg.record_tile_trace = cfg.record_runtime_trace = cfg.record_schedule_trace = false;
  cfg.record_layer_timing = false;
  cfg.scenario = {};
  TaskSpec solo = task;
  solo.dispatch_cycle = 0;
  cfg.scenario.tasks.push_back(solo);
  return run_simulation(cfg).tasks.front().end_to_end_cycles;
}

RepartitionCounts count_repartition_events(const SimResult& result) {
  RepartitionCounts c;
  for (const auto& t : result.tasks) {
    c.mem_reconfigs += t.throttle_reconfigs;
    c.compute_migrations += t.migrations;
    c.migration_cycles += t.migration_cycles;
  }
  return c;
}

namespace {
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

std::string serialize_tasks_csv(const SimResult& r) {
  std::ostringstream os;
  os << "task_id,network,priority,dispatch_cycle,start_cycle,finish_cycle,end_to_end_cycles,qos_target_cycles,"
        "deadline_met,migrations,throttle_reconfigs,migration_cycles,reconfig_cycles,dram_bytes_served\n";
  for (const auto& t : r.tasks)
    os << t.task_id << ',' << t.network << ',' << t.priority << ',' << t.dispatch_cycle << ',' << t.start_cycle << ','
       << t.finish_cycle << ',' << t.end_to_end_cycles << ',' << t.qos_target_cycles << ',' << (t.deadline_met ? 1 : 0)
       << ',' << t.migrations << ',' << t.throttle_reconfigs << ',' << t.migration_cycles << ',' << t.reconfig_cycles
       << ',' << t.dram_bytes_served << '\n';
  return os.str();
}

std::string serialize_tile_trace_csv(const SimResult& r) {
  std::ostringstream os;
  os << "epoch,tile_id,task_id,demanded_bytes,served_bytes,stalled_flag\n";
  for (const auto& row : r.tile_trace)
    os << row.epoch << ',' << row.tile_id << ',' << row.task_id << ',' << row.demanded_bytes << ','
       << row.served_bytes << ',' << (row.stalled ? 1 : 0) << '\n';
  return os.str();
}

std::string serialize_runtime_trace_csv(const SimResult& r) {
  std::ostringstream os;
  os << "cycle,task_id,layer,score,bw_rate_before,bw_rate_after,overflow,window,threshold_load\n";
  for (const auto& row : r.runtime_trace)
    os << row.cycle << ',' << row.task_id << ',' << row.layer << ',' << fmt_double(row.score) << ','
       << fmt_double(row.bw_rate_before) << ',' << fmt_double(row.bw_rate_after) << ',' << fmt_double(row.overflow)
       << ',' << row.window << ',' << row.threshold_load << '\n';
  return os.str();
}

std::string serialize_schedule_trace_csv(const SimResult& r, Policy policy) {
  std::ostringstream os;
  os << "cycle,policy,event,task_id,tiles,score\n";
  for (const auto& row : r.schedule_trace)
    os << row.cycle << ',' << to_string(policy) << ',' << row.event << ',' << row.task_id << ',' << row.tiles << ','
       << fmt_double(row.score) << '\n';
  return os.str();
}

}  // namespace moca
