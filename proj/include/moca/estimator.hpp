#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "moca/workload.hpp"

namespace moca {

/// Analytical latency / traffic prediction for one layer on a tile allocation.
struct LayerEstimate {
  double compute_ideal_cycles = 0;
  double memory_ideal_cycles = 0;
  double prediction_exact = 0;  // before rounding
  Cycle prediction_cycles = 0;  // rounded up
  Bytes total_mem_bytes = 0;    // traffic to the shared L2
  Bytes from_dram_bytes = 0;    // subset of it that reaches DRAM
  double bw_rate = 0;           // from_dram / prediction, bytes per cycle
};

/// max(c, m) + min(c, m) * f
double overlap_combine(double compute_cycles, double memory_cycles, double overlap_f);

LayerEstimate estimate_layer(const LayerDesc& layer, const SocConfig& soc, unsigned num_tiles);

struct NetworkEstimate {
  std::vector<LayerEstimate> layers;
  Cycle total_cycles = 0;
  Bytes total_from_dram = 0;

  /// Network-wide DRAM demand, bytes per cycle.
  double avg_bw() const {
    return total_cycles ? static_cast<double>(total_from_dram) / static_cast<double>(total_cycles) : 0.0;
  }
};

NetworkEstimate estimate_network(const NetworkDesc& net, const SocConfig& soc, unsigned num_tiles);

struct OverlapSample {
  LayerDesc layer;
  double measured_cycles = 0;
  unsigned num_tiles = 1;
};

/// Fits overlap_f to measured layer latencies: per-sample inversion
/// (measured - max) / min, median-aggregated, clamped to [0.01, 0.99].
/// Samples with min(c, m) == 0 carry no information and are skipped.
double tune_overlap_f(std::span<const OverlapSample> samples, const SocConfig& soc);

inline constexpr double kOverlapLowerClamp = 0.01;
inline constexpr double kOverlapUpperClamp = 0.99;

/// Block index per layer: maximal runs of consecutive layers sharing the same
/// compute-bound (compute_ideal >= memory_ideal) classification.
std::vector<std::size_t> layer_blocks(const NetworkDesc& net, const SocConfig& soc, unsigned num_tiles);

}  // namespace moca
