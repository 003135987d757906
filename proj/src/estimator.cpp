#include "moca/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "moca/errors.hpp"

namespace moca {

double overlap_combine(double compute_cycles, double memory_cycles, double overlap_f) {
  return std::max(compute_cycles, memory_cycles) + std::min(compute_cycles, memory_cycles) * overlap_f;
}

LayerEstimate estimate_layer(const LayerDesc& layer, const SocConfig& soc, unsigned num_tiles) {
  if (num_tiles == 0 || num_tiles > soc.num_tiles)
    throw ValidationError("estimate_layer: tile allocation must be in 1.." + std::to_string(soc.num_tiles));
  LayerEstimate e;
  const double dram_bw = soc.dram_bw_bytes_per_cycle;
  const double l2_bw = soc.l2_bw_bytes_per_cycle;

  if (layer.kind == LayerKind::Compute) {
    if (layer.total_mac == 0) throw ValidationError("layer '" + layer.name + "': COMPUTE layer with zero MACs");
    e.compute_ideal_cycles =
        static_cast<double>(layer.total_mac) / (static_cast<double>(soc.pes_per_tile) * num_tiles);

    // Total_load: weights and bias once; the input is re-streamed once per
    // tile only when a tile does not fit the scratchpad.
    // Total_store: the output activation.
    const std::uint64_t input_reloads =
        layer.tile_bytes > soc.scratchpad_bytes_per_tile ? std::max<std::uint64_t>(1, layer.tiling_factor) : 1;
    const Bytes loads = layer.weight_bytes + layer.input_bytes * input_reloads + layer.bias_bytes;
    const Bytes stores = layer.output_bytes;
    e.total_mem_bytes = loads + stores;

    e.from_dram_bytes = layer.weight_bytes + layer.output_bytes + layer.bias_bytes;
    if (layer.input_bytes > soc.l2_bytes) e.from_dram_bytes += layer.input_bytes;  // evicted input
    if (layer.tile_bytes > soc.l2_bytes) e.from_dram_bytes += layer.tiling_factor * layer.tile_bytes;

    e.memory_ideal_cycles = static_cast<double>(e.from_dram_bytes) / dram_bw +
                            static_cast<double>(e.total_mem_bytes) / l2_bw;
    e.prediction_exact = overlap_combine(e.compute_ideal_cycles, e.memory_ideal_cycles, soc.overlap_f);
  } else {
    e.total_mem_bytes = layer.input_bytes + layer.input_b_bytes + layer.output_bytes;
    e.from_dram_bytes = layer.input_b_bytes + layer.output_bytes;
    e.memory_ideal_cycles = static_cast<double>(e.from_dram_bytes) / dram_bw +
                            static_cast<double>(e.total_mem_bytes) / l2_bw;
    e.prediction_exact = e.memory_ideal_cycles;
  }
  // Guard against 1-ulp noise pushing an exact integer over the ceiling.
  e.prediction_cycles = static_cast<Cycle>(std::ceil(e.prediction_exact - 1e-9));
  if (e.prediction_cycles == 0) e.prediction_cycles = 1;
  e.bw_rate = static_cast<double>(e.from_dram_bytes) / static_cast<double>(e.prediction_cycles);
  return e;
}

NetworkEstimate estimate_network(const NetworkDesc& net, const SocConfig& soc, unsigned num_tiles) {
  net.validate();
  NetworkEstimate out;
  out.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    out.layers.push_back(estimate_layer(layer, soc, num_tiles));
    out.total_cycles += out.layers.back().prediction_cycles;
    out.total_from_dram += out.layers.back().from_dram_bytes;
  }
  return out;
}

double tune_overlap_f(std::span<const OverlapSample> samples, const SocConfig& soc) {
  if (samples.empty()) throw std::invalid_argument("tune_overlap_f: empty sample list");
  std::vector<double> fits;
  for (const auto& s : samples) {
    const auto e = estimate_layer(s.layer, soc, s.num_tiles);
    const double hi = std::max(e.compute_ideal_cycles, e.memory_ideal_cycles);
    const double lo = std::min(e.compute_ideal_cycles, e.memory_ideal_cycles);
    if (lo <= 0) continue;
    fits.push_back((s.measured_cycles - hi) / lo);
  }
  if (fits.empty()) return kOverlapLowerClamp;
  std::sort(fits.begin(), fits.end());
  const std::size_t mid = fits.size() / 2;
  const double median = fits.size() % 2 ? fits[mid] : 0.5 * (fits[mid - 1] + fits[mid]);
  return std::clamp(median, kOverlapLowerClamp, kOverlapUpperClamp);
}

std::vector<std::size_t> layer_blocks(const NetworkDesc& net, const SocConfig& soc, unsigned num_tiles) {
  std::vector<std::size_t> blocks;
  blocks.reserve(net.layers.size());
  std::size_t block = 0;
  bool prev_compute_bound = false;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto e = estimate_layer(net.layers[i], soc, num_tiles);
    const bool compute_bound = e.compute_ideal_cycles >= e.memory_ideal_cycles;
    if (i > 0 && compute_bound != prev_compute_bound) ++block;
    blocks.push_back(block);
    prev_compute_bound = compute_bound;
  }
  return blocks;
}

}  // namespace moca
