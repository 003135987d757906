#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "moca/workload.hpp"

namespace moca {

/// Bytes moved by one memory request (one cache-line DMA beat).
inline constexpr Bytes kRequestBytes = 64;

/// Per-tile regulation setting. (0, 0) disables throttling.
struct ThrottleConfig {
  Cycle window_cycles = 0;
  std::uint64_t threshold_load = 0;  // requests per window

  bool enabled() const { return window_cycles != 0; }
  /// Throws ValidationError unless window and threshold are both set or both zero.
  void validate() const;

  friend bool operator==(const ThrottleConfig&, const ThrottleConfig&) = default;
};

/// Access counter and thresholding engine of one accelerator tile.
///
/// The counter is a periodic budget: it resets at every window boundary and
/// on reconfiguration. While the counter has reached the threshold the tile
/// is stalled (bubbles) and issues nothing.
struct TileState {
  unsigned tile_id = 0;
  std::optional<TaskId> assigned_task;
  std::size_t current_layer = 0;
  std::uint64_t access_counter = 0;
  Cycle window_start_cycle = 0;
  ThrottleConfig throttle;
  bool stalled = false;
  double compute_done_units = 0;
  double mem_done_bytes = 0;
  double window_bytes = 0;  // traffic issued in the current window

  static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();

  /// Advances the window so that it contains `now`, resetting the counter
  /// when a boundary was crossed. No-op when throttling is disabled or the
  /// window has not started yet.
  void roll_window(Cycle now);

  /// Requests the tile may still issue in the current window.
  std::uint64_t headroom_requests(Cycle now);

  /// Cycle-level issue of a single request. Returns false (and leaves the
  /// counter unchanged) while stalled or before the reconfigured window opens.
  bool try_issue(Cycle now);

  /// Bulk accounting of requests issued during an epoch.
  void record_requests(std::uint64_t n);

  /// Byte-level accounting: the counter becomes the number of 64 B requests
  /// needed for all bytes issued so far in this window.
  void record_bytes(double bytes);

  /// Bytes the tile may still issue in the current window.
  double headroom_bytes(Cycle now);
};

/// Installs a new throttle setting: counter cleared, stall cleared, and the
/// new window opens once the reconfiguration latency has elapsed.
TileState& configure_throttle(TileState& tile, const ThrottleConfig& cfg, Cycle now, Cycle reconfig_cost);

/// Work a tile could perform (or has left) in the current layer.
struct TileWork {
  double dram_bytes = 0;
  double traffic_bytes = 0;  // all L2 traffic, DRAM-backed or not
  double compute_units = 0;
};

struct TileDemand {
  Bytes dram_bytes = 0;
  Bytes l2_bytes = 0;
  double compute_units = 0;
};

/// Per-epoch demand of a busy tile: the remaining work, capped by what the
/// tile can do in this epoch, then capped by its throttle headroom (headroom
/// bounds total traffic; DRAM demand shrinks by the same factor).
TileDemand tile_demand(TileState& tile, const TileWork& remaining, const TileWork& epoch_capacity, Cycle now);

/// Proportional-share arbitration of one shared resource for one epoch.
/// Fully serves everyone when demand fits; otherwise shares are floored to
/// `granularity`, leftover granules go to the largest fractional shares (ties
/// to the lower index), then any sub-granule leftover goes by ascending index.
std::vector<Bytes> arbitrate_epoch(std::span<const Bytes> demands, Bytes capacity, Bytes granularity);

struct TileRequest {
  unsigned tile_id = 0;
  Bytes dram_bytes = 0;
  Bytes l2_bytes = 0;
};

struct TileGrant {
  unsigned tile_id = 0;
  Bytes dram_bytes = 0;
  Bytes l2_bytes = 0;
};

/// Shared DRAM + L2 serving per-epoch tile demands.
class MemorySystem {
 public:
  MemorySystem(const SocConfig& soc, Cycle epoch_cycles, Bytes granularity = 1);

  Bytes dram_capacity_per_epoch() const { return dram_capacity_; }
  Bytes l2_capacity_per_epoch() const { return l2_capacity_; }

  /// DRAM arbitration first; the L2 check then scales down tiles whose
  /// traffic would exceed the L2 epoch capacity, shrinking their DRAM grant
  /// in proportion. Grants are in request order.
  std::vector<TileGrant> serve(std::span<const TileRequest> requests) const;

 private:
  Bytes dram_capacity_;
  Bytes l2_capacity_;
  Bytes granularity_;
};

}  // namespace moca
