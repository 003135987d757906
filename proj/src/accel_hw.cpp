#include "moca/accel_hw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "moca/errors.hpp"

namespace moca {

void ThrottleConfig::validate() const {
  if ((window_cycles == 0) != (threshold_load == 0))
    throw ValidationError("throttle window and threshold must be both set or both zero");
}

void TileState::roll_window(Cycle now) {
  if (!throttle.enabled() || now < window_start_cycle) return;
  const Cycle elapsed = now - window_start_cycle;
  if (elapsed < throttle.window_cycles) return;
  window_start_cycle += (elapsed / throttle.window_cycles) * throttle.window_cycles;
  access_counter = 0;
  window_bytes = 0;
  stalled = false;
}

std::uint64_t TileState::headroom_requests(Cycle now) {
  if (!throttle.enabled()) return kUnlimited;
  if (now < window_start_cycle) return 0;
  roll_window(now);
  return throttle.threshold_load - std::min(access_counter, throttle.threshold_load);
}

bool TileState::try_issue(Cycle now) {
  if (!throttle.enabled()) {
    ++access_counter;
    return true;
  }
  if (now < window_start_cycle) return false;
  roll_window(now);
  if (access_counter >= throttle.threshold_load) {
    stalled = true;
    return false;
  }
  ++access_counter;
  stalled = access_counter >= throttle.threshold_load;
  return true;
}

void TileState::record_requests(std::uint64_t n) {
  access_counter += n;
  if (throttle.enabled()) stalled = access_counter >= throttle.threshold_load;
}

void TileState::record_bytes(double bytes) {
  window_bytes += bytes;
  const auto needed = static_cast<std::uint64_t>(std::ceil(window_bytes / static_cast<double>(kRequestBytes) - 1e-9));
  if (needed > access_counter) record_requests(needed - access_counter);
}

double TileState::headroom_bytes(Cycle now) {
  const std::uint64_t req = headroom_requests(now);
  if (req == kUnlimited) return std::numeric_limits<double>::infinity();
  if (req == 0) return 0.0;
  const double req_bytes = static_cast<double>(kRequestBytes);
  const auto billed = static_cast<std::uint64_t>(std::ceil(window_bytes / req_bytes - 1e-9));
  // Byte-accounted windows may use the tail of a partly filled request.
  const double used = billed == access_counter ? window_bytes : static_cast<double>(access_counter) * req_bytes;
  return std::max(0.0, static_cast<double>(throttle.threshold_load) * req_bytes - used);
}

TileState& configure_throttle(TileState& tile, const ThrottleConfig& cfg, Cycle now, Cycle reconfig_cost) {
  cfg.validate();
  tile.throttle = cfg;
  tile.access_counter = 0;
  tile.window_bytes = 0;
  tile.window_start_cycle = now + reconfig_cost;
  tile.stalled = false;
  return tile;
}

TileDemand tile_demand(TileState& tile, const TileWork& remaining, const TileWork& epoch_capacity, Cycle now) {
  double dram = std::max(0.0, std::min(remaining.dram_bytes, epoch_capacity.dram_bytes));
  double traffic = std::max(0.0, std::min(remaining.traffic_bytes, epoch_capacity.traffic_bytes));
  const double compute = std::max(0.0, std::min(remaining.compute_units, epoch_capacity.compute_units));

  if (tile.throttle.enabled()) {
    const double budget = tile.headroom_bytes(now);
    if (traffic > budget) {
      dram = traffic > 0 ? dram * (budget / traffic) : 0.0;
      traffic = budget;
    }
    // DRAM bytes are a subset of traffic.
    if (dram > budget) dram = budget;
  }
  TileDemand d;
  d.dram_bytes = static_cast<Bytes>(std::ceil(dram - 1e-9));
  d.l2_bytes = static_cast<Bytes>(std::ceil(traffic - 1e-9));
  d.compute_units = compute;
  return d;
}

std::vector<Bytes> arbitrate_epoch(std::span<const Bytes> demands, Bytes capacity, Bytes granularity) {
  using Wide = unsigned __int128;
  if (granularity == 0) granularity = 1;
  const Wide total = std::accumulate(demands.begin(), demands.end(), Wide{0});
  std::vector<Bytes> served(demands.begin(), demands.end());
  if (total <= capacity) return served;

  const std::size_t n = demands.size();
  std::vector<Wide> remainder(n);
  Bytes used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Wide num = Wide{capacity} * demands[i];
    const Wide granules = num / (total * granularity);
    served[i] = static_cast<Bytes>(granules) * granularity;
    remainder[i] = num - granules * total * granularity;
    used += served[i];
  }
  Bytes left = capacity - used;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i : order) {
    if (left < granularity) break;
    const Bytes add = std::min({granularity, demands[i] - served[i], left});
    served[i] += add;
    left -= add;
  }
  for (std::size_t i = 0; i < n && left > 0; ++i) {
    const Bytes add = std::min(demands[i] - served[i], left);
    served[i] += add;
    left -= add;
  }
  return served;
}

MemorySystem::MemorySystem(const SocConfig& soc, Cycle epoch_cycles, Bytes granularity)
    : dram_capacity_(static_cast<Bytes>(std::floor(soc.dram_bw_bytes_per_cycle * static_cast<double>(epoch_cycles)))),
      l2_capacity_(static_cast<Bytes>(std::floor(soc.l2_bw_bytes_per_cycle * static_cast<double>(epoch_cycles)))),
      granularity_(granularity) {}

std::vector<TileGrant> MemorySystem::serve(std::span<const TileRequest> requests) const {
  std::vector<Bytes> dram_want;
  dram_want.reserve(requests.size());
  for (const auto& r : requests) dram_want.push_back(r.dram_bytes);
  const auto dram_got = arbitrate_epoch(dram_want, dram_capacity_, granularity_);

  std::vector<TileGrant> grants(requests.size());
  std::vector<Bytes> l2_want(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    grants[i].tile_id = r.tile_id;
    grants[i].dram_bytes = dram_got[i];
    // L2 traffic shrinks with the DRAM grant; pure-L2 traffic is untouched.
    l2_want[i] = r.dram_bytes == 0
                     ? r.l2_bytes
                     : static_cast<Bytes>(static_cast<long double>(r.l2_bytes) * dram_got[i] / r.dram_bytes);
    l2_want[i] = std::max(l2_want[i], grants[i].dram_bytes);
  }
  const auto l2_got = arbitrate_epoch(l2_want, l2_capacity_, granularity_);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    grants[i].l2_bytes = l2_got[i];
    if (l2_got[i] < l2_want[i] && l2_want[i] > 0)
      grants[i].dram_bytes = static_cast<Bytes>(static_cast<long double>(grants[i].dram_bytes) * l2_got[i] / l2_want[i]);
  }
  return grants;
}

}  // namespace moca
