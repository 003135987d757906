#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace moca {

using Cycle = std::uint64_t;
using Bytes = std::uint64_t;
using TaskId = std::uint32_t;

enum class LayerKind { Compute, Mem };

std::string_view to_string(LayerKind kind);

// One DNN layer. COMPUTE layers carry MACs; MEM layers are pure data movement
// (residual adds, pooling, concatenation) and may have a second operand.
struct LayerDesc {
  std::string name;
  LayerKind kind = LayerKind::Compute;
  std::uint64_t total_mac = 0;
  Bytes weight_bytes = 0;
  Bytes input_bytes = 0;    // activation / operand A
  Bytes input_b_bytes = 0;  // operand B, MEM layers only
  Bytes output_bytes = 0;
  Bytes bias_bytes = 0;
  Bytes tile_bytes = 0;     // footprint of one tile of the loop nest
  std::uint64_t tiling_factor = 1;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
};

struct NetworkDesc {
  std::string name;
  std::vector<LayerDesc> layers;

  void validate() const;
};

struct SocConfig {
  unsigned num_tiles = 8;
  unsigned pes_per_tile = 256;  // 16x16 systolic array
  Bytes scratchpad_bytes_per_tile = 128 * 1024;
  Bytes accumulator_bytes_per_tile = 64 * 1024;
  Bytes l2_bytes = 2 * 1024 * 1024;
  unsigned l2_banks = 8;
  double dram_bw_bytes_per_cycle = 16.0;  // 16 GB/s at 1 GHz
  double l2_bw_bytes_per_cycle = 64.0;    // 8 banks x 8 B
  double frequency_hz = 1e9;
  double overlap_f = 0.25;
  Cycle mem_repartition_cost_cycles = 8;
  Cycle compute_repartition_cost_cycles = 1'000'000;
  // Double-buffered load/execute pipeline depth of the simulated tiles. An
  // uncontended layer split into k chunks finishes in max + min/k cycles,
  // which is what `overlap_f` approximates.
  unsigned pipeline_chunks = 4;

  void validate() const;
};

struct TaskSpec {
  TaskId task_id = 0;
  std::shared_ptr<const NetworkDesc> network;
  Cycle dispatch_cycle = 0;
  int user_priority = 0;  // 0..11
  Cycle qos_target_cycles = 1;

  void validate() const;
};

enum class WorkloadSet { A, B, C };
enum class QosLevel { L, M, H };

std::string_view to_string(WorkloadSet set);
std::string_view to_string(QosLevel level);
WorkloadSet parse_workload_set(std::string_view text);
QosLevel parse_qos_level(std::string_view text);

/// 1.2 / 1.0 / 0.8 for QoS-L / M / H.
double qos_multiplier(QosLevel level);

/// Benchmark network names belonging to a workload set, in a fixed order.
std::vector<std::string> workload_set_members(WorkloadSet set);

struct WorkloadScenario {
  std::vector<TaskSpec> tasks;
  WorkloadSet workload_set = WorkloadSet::C;
  QosLevel qos_level = QosLevel::M;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Network description files

/// Parses a JSON network description. Layer byte sizes omitted from the file
/// are derived from `dims` (element count x element_bytes); tile_bytes and
/// tiling_factor default to the smallest scratchpad-sized tiling of the
/// layer's working set.
NetworkDesc parse_network(std::string_view text, const SocConfig& soc = {});
NetworkDesc load_network(const std::filesystem::path& path, const SocConfig& soc = {});

/// Every *.json network in a directory, keyed by network name.
class NetworkLibrary {
 public:
  NetworkLibrary() = default;
  static NetworkLibrary load_directory(const std::filesystem::path& dir, const SocConfig& soc = {});

  void add(NetworkDesc net);
  std::shared_ptr<const NetworkDesc> get(const std::string& name) const;
  bool contains(const std::string& name) const { return nets_.count(name) != 0; }
  const std::map<std::string, std::shared_ptr<const NetworkDesc>>& all() const { return nets_; }

 private:
  std::map<std::string, std::shared_ptr<const NetworkDesc>> nets_;
};

// ---------------------------------------------------------------------------
// Scenario generation

inline constexpr int kMaxPriority = 11;

/// Default priority weights: geometric decay 0.8^p over 0..11, so low
/// priorities dominate like production cluster traces.
std::vector<double> default_priority_weights();

struct WorkloadParams {
  std::uint64_t seed = 1;
  std::size_t n = 250;
  WorkloadSet set = WorkloadSet::C;
  QosLevel qos_level = QosLevel::M;
  double qos_k = 2.0;          // baseline QoS = qos_k x isolated estimate
  double arrival_scale = 0.5;  // mean inter-arrival / mean isolated latency
  std::vector<double> priority_weights = default_priority_weights();
  std::size_t min_n = 200;
  std::size_t max_n = 500;
  bool allow_any_n = false;  // desk-scale override of [min_n, max_n]

  void validate() const;
};

/// Baseline QoS of a network: qos_k x its full-SoC single-tenant estimate.
double baseline_qos_cycles(const NetworkDesc& net, const SocConfig& soc, double qos_k);

WorkloadScenario generate_workload(const WorkloadParams& params, const NetworkLibrary& lib,
                                   const SocConfig& soc);

}  // namespace moca
