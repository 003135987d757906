#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "moca/workload.hpp"

namespace moca::test {

inline std::filesystem::path assets_dir() { return MOCA_ASSETS_DIR; }
inline std::filesystem::path networks_dir() { return assets_dir() / "networks"; }

inline LayerDesc compute_layer(std::string name, std::uint64_t macs, Bytes weights, Bytes input, Bytes output) {
  LayerDesc l;
  l.name = std::move(name);
  l.kind = LayerKind::Compute;
  l.total_mac = macs;
  l.weight_bytes = weights;
  l.input_bytes = input;
  l.output_bytes = output;
  l.tile_bytes = std::max<Bytes>(1, weights + input + output);
  l.tiling_factor = 1;
  return l;
}

inline LayerDesc mem_layer(std::string name, Bytes a, Bytes b, Bytes out) {
  LayerDesc l;
  l.name = std::move(name);
  l.kind = LayerKind::Mem;
  l.input_bytes = a;
  l.input_b_bytes = b;
  l.output_bytes = out;
  l.tile_bytes = std::max<Bytes>(1, a + b + out);
  return l;
}

inline std::shared_ptr<const NetworkDesc> network(std::string name, std::vector<LayerDesc> layers) {
  auto n = std::make_shared<NetworkDesc>();
  n->name = std::move(name);
  n->layers = std::move(layers);
  return n;
}

}  // namespace moca::test
