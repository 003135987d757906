#include <doctest.h>

#include <vector>

#include "moca/accel_hw.hpp"
#include "moca/errors.hpp"

using namespace moca;

TEST_CASE("disabled throttle never stalls") {
  TileState t;
  configure_throttle(t, {0, 0}, 0, 8);
  for (Cycle c = 0; c < 5000; ++c) REQUIRE(t.try_issue(c));
  CHECK_FALSE(t.stalled);
  CHECK(t.headroom_requests(10) == TileState::kUnlimited);
}

TEST_CASE("half-set throttle is invalid") {
  CHECK_THROWS_AS(ThrottleConfig({100, 0}).validate(), ValidationError);
  CHECK_THROWS_AS(ThrottleConfig({0, 5}).validate(), ValidationError);
}

TEST_CASE("window 1000 threshold 100: stall at 400 until rollover") {
  TileState t;
  configure_throttle(t, {1000, 100}, 0, 0);
  for (int i = 0; i < 100; ++i) REQUIRE(t.try_issue(static_cast<Cycle>(i * 4)));
  CHECK(t.stalled);
  CHECK(t.access_counter == 100);
  for (Cycle c = 400; c < 1000; c += 50) CHECK_FALSE(t.try_issue(c));
  CHECK(t.try_issue(1000));
  CHECK(t.access_counter == 1);
  CHECK(t.window_start_cycle == 1000);
  CHECK_FALSE(t.stalled);
}

TEST_CASE("reconfiguration clears a stall; new window opens after the latency") {
  TileState t;
  configure_throttle(t, {1000, 100}, 0, 0);
  t.record_requests(100);
  REQUIRE(t.stalled);
  configure_throttle(t, {1000, 100}, 500, 8);
  CHECK_FALSE(t.stalled);
  CHECK(t.access_counter == 0);
  CHECK(t.window_start_cycle == 508);
  CHECK_FALSE(t.try_issue(504));
  CHECK(t.try_issue(508));
}

TEST_CASE("byte billing rounds up to whole requests") {
  TileState t;
  configure_throttle(t, {100, 4}, 0, 0);
  t.record_bytes(65);
  CHECK(t.access_counter == 2);
  CHECK(t.headroom_bytes(10) == doctest::Approx(4 * 64 - 65));
  t.record_bytes(63);
  CHECK(t.access_counter == 2);
}

TEST_CASE("tile demand") {
  const TileWork cap{160, 640, 1e9};
  SUBCASE("fully throttled tile issues nothing") {
    TileState t;
    configure_throttle(t, {1000, 10}, 0, 0);
    t.record_requests(10);
    const auto d = tile_demand(t, {500, 500, 10}, cap, 5);
    CHECK(d.dram_bytes == 0);
    CHECK(d.l2_bytes == 0);
  }
  SUBCASE("unthrottled demand capped by remaining work") {
    TileState t;
    CHECK(tile_demand(t, {100, 100, 0}, cap, 0).dram_bytes == 100);
    CHECK(tile_demand(t, {1000, 1000, 0}, cap, 0).dram_bytes == 160);
  }
  SUBCASE("two requests of headroom cap demand at 128 B") {
    TileState t;
    configure_throttle(t, {1000, 2}, 0, 0);
    const auto d = tile_demand(t, {1000, 1000, 0}, cap, 0);
    CHECK(d.l2_bytes <= 2 * kRequestBytes);
    CHECK(d.dram_bytes <= 2 * kRequestBytes);
  }
}

TEST_CASE("arbitration examples") {
  auto serve = [](std::vector<Bytes> d, Bytes cap) { return arbitrate_epoch(d, cap, 1); };
  CHECK(serve({8, 8}, 16) == std::vector<Bytes>{8, 8});
  CHECK(serve({16, 16}, 16) == std::vector<Bytes>{8, 8});
  CHECK(serve({12, 4, 8}, 16) == std::vector<Bytes>{8, 3, 5});
  CHECK(serve({}, 16).empty());
  CHECK(serve({5, 5, 5}, 16) == std::vector<Bytes>{5, 5, 5});
  // Equal remainders tie to the lower index.
  CHECK(serve({1, 1, 1}, 2) == std::vector<Bytes>{1, 1, 0});
}

TEST_CASE("memory system scales DRAM with the L2 cap") {
  SocConfig soc;
  const MemorySystem mem(soc, 100);
  CHECK(mem.dram_capacity_per_epoch() == 1600);
  CHECK(mem.l2_capacity_per_epoch() == 6400);
  const std::vector<TileRequest> reqs{{0, 1000, 4000}, {1, 1000, 4000}};
  const auto g = mem.serve(reqs);
  Bytes dram = 0, l2 = 0;
  for (const auto& x : g) {
    dram += x.dram_bytes;
    l2 += x.l2_bytes;
    CHECK(x.dram_bytes <= x.l2_bytes);
  }
  CHECK(dram <= 1600);
  CHECK(l2 <= 6400);
}
