// Randomized invariants; every generator is seeded so failures replay.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "moca/accel_hw.hpp"
#include "moca/metrics.hpp"
#include "moca/runtime.hpp"
#include "moca/scheduler.hpp"

using namespace moca;

TEST_CASE("throttle: requests served per window never exceed the threshold") {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<Cycle> window_d(1, 2000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uint64_t violations = 0, issued_total = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Cycle window = window_d(rng);
    const std::uint64_t threshold = std::uniform_int_distribution<std::uint64_t>(1, window)(rng);
    const double p_issue = u(rng);
    const Cycle cost = std::uniform_int_distribution<Cycle>(0, 16)(rng);
    const Cycle start = std::uniform_int_distribution<Cycle>(0, 500)(rng);
    TileState t;
    configure_throttle(t, {window, threshold}, start, cost);
    const Cycle open = start + cost;
    std::map<Cycle, std::uint64_t> per_window;
    for (Cycle c = start; c < open + 5 * window; ++c) {
      if (u(rng) >= p_issue) continue;
      if (!t.try_issue(c)) continue;
      ++issued_total;
      if (c < open) {
        ++violations;  // nothing may issue before the window opens
        continue;
      }
      ++per_window[(c - open) / window];
    }
    for (const auto& [w, n] : per_window)
      if (n > threshold) ++violations;
  }
  CHECK(issued_total > 0);
  CHECK(violations == 0);
}

TEST_CASE("throttle: byte-level epoch billing stays within the window budget") {
  std::mt19937_64 rng(77);
  std::uint64_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Cycle epoch = 100;
    const Cycle window = epoch * std::uniform_int_distribution<Cycle>(1, 10)(rng);
    const std::uint64_t threshold = std::uniform_int_distribution<std::uint64_t>(1, 400)(rng);
    TileState t;
    configure_throttle(t, {window, threshold}, 0, 0);
    std::map<Cycle, double> bytes;
    for (Cycle now = 0; now < 20 * window; now += epoch) {
      const double want = std::uniform_real_distribution<double>(0, 3000)(rng);
      const double issue = std::min(want, t.headroom_bytes(now));
      t.record_bytes(issue);
      bytes[now / window] += issue;
      if (t.access_counter > threshold) ++violations;
    }
    for (const auto& [w, b] : bytes)
      if (b > static_cast<double>(threshold * kRequestBytes) + 1e-6) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("arbitration conserves capacity and stays proportional") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    std::vector<Bytes> d(n);
    for (auto& x : d) x = std::uniform_int_distribution<Bytes>(0, 5000)(rng);
    const Bytes cap = std::uniform_int_distribution<Bytes>(0, 20000)(rng);
    const Bytes gran = std::uniform_int_distribution<Bytes>(1, 64)(rng);
    const auto s = arbitrate_epoch(d, cap, gran);
    const Bytes total = std::accumulate(d.begin(), d.end(), Bytes{0});
    REQUIRE(std::accumulate(s.begin(), s.end(), Bytes{0}) == std::min(total, cap));
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(s[i] <= d[i]);
      if (total > cap) {
        const double fair = static_cast<double>(cap) * static_cast<double>(d[i]) / static_cast<double>(total);
        REQUIRE(std::abs(static_cast<double>(s[i]) - fair) <= static_cast<double>(2 * gran) + 1e-9);
      }
    }
  }
}

TEST_CASE("partition: symmetric pairs split capacity exactly") {
  std::mt19937_64 rng(4242);
  const SocConfig soc;
  RuntimeOptions literal;
  literal.score_share_floor = false;
  for (int trial = 0; trial < 500; ++trial) {
    const double bw = std::uniform_real_distribution<double>(8.01, 16.0)(rng);
    const double score = std::uniform_real_distribution<double>(0.0, 111.0)(rng);
    LayerEstimate e;
    e.bw_rate = bw;
    e.prediction_cycles = 10'000;
    e.from_dram_bytes = static_cast<Bytes>(bw * 10'000);
    e.total_mem_bytes = e.from_dram_bytes;
    const std::vector<ScoreboardEntry> other{{1, bw, bw, score}};
    for (const auto& opts : {literal, RuntimeOptions{}}) {
      const auto r = detect_and_partition(e, score, other, soc, 2, opts);
      REQUIRE(r.contention);
      REQUIRE(2 * r.bw_rate == doctest::Approx(soc.dram_bw_bytes_per_cycle).epsilon(1e-9));
    }
  }
}

TEST_CASE("partition: never raises a rate, higher score never loses more") {
  std::mt19937_64 rng(99);
  const SocConfig soc;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    std::vector<ScoreboardEntry> others;
    for (std::size_t i = 0; i < n; ++i) {
      const double bw = std::uniform_real_distribution<double>(0.0, 16.0)(rng);
      others.push_back({static_cast<TaskId>(i + 1), bw, bw, std::uniform_real_distribution<double>(0, 12)(rng)});
    }
    LayerEstimate e;
    e.bw_rate = std::uniform_real_distribution<double>(0.01, 16.0)(rng);
    e.prediction_cycles = 5000;
    e.from_dram_bytes = static_cast<Bytes>(e.bw_rate * 5000);
    e.total_mem_bytes = 2 * e.from_dram_bytes;
    const double lo = std::uniform_real_distribution<double>(0, 11)(rng);
    const auto a = detect_and_partition(e, lo, others, soc, 1);
    const auto b = detect_and_partition(e, lo + 5, others, soc, 1);
    REQUIRE(a.bw_rate <= e.bw_rate + 1e-12);
    REQUIRE(a.bw_rate > 0);
    REQUIRE(b.bw_rate >= a.bw_rate - 1e-9);
    if (a.contention) {
      REQUIRE(a.throttle.enabled());
      REQUIRE(a.throttle.window_cycles <= RuntimeOptions{}.max_window_cycles);
    }
  }
}

TEST_CASE("fairness is scale and permutation invariant") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 10)(rng);
    std::vector<double> cs(n), cm(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      cs[i] = std::uniform_real_distribution<double>(100, 1e6)(rng);
      cm[i] = cs[i] * std::uniform_real_distribution<double>(1, 20)(rng);
      w[i] = std::uniform_int_distribution<int>(1, 12)(rng);
    }
    const double f = fairness(cs, cm, w).fairness;
    REQUIRE(f > 0);
    REQUIRE(f <= 1.0);

    const double k = std::uniform_real_distribution<double>(0.1, 100)(rng);
    auto cs2 = cs, cm2 = cm, w2 = w;
    for (std::size_t i = 0; i < n; ++i) {
      cs2[i] *= k;
      cm2[i] *= k;
      w2[i] *= k;
    }
    REQUIRE(fairness(cs2, cm2, w2).fairness == doctest::Approx(f).epsilon(1e-12));

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> cs3(n), cm3(n), w3(n);
    for (std::size_t i = 0; i < n; ++i) {
      cs3[i] = cs[perm[i]];
      cm3[i] = cm[perm[i]];
      w3[i] = w[perm[i]];
    }
    REQUIRE(fairness(cs3, cm3, w3).fairness == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("STP is at most n when nobody speeds up") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    std::vector<TaskResult> ts(n);
    IsolatedMap iso;
    for (std::size_t i = 0; i < n; ++i) {
      ts[i].task_id = static_cast<TaskId>(i);
      iso[ts[i].task_id] = std::uniform_int_distribution<Cycle>(1, 1'000'000)(rng);
      ts[i].end_to_end_cycles = iso[ts[i].task_id] + std::uniform_int_distribution<Cycle>(0, 1'000'000)(rng);
    }
    const double s = stp(ts, iso);
    REQUIRE(s > 0);
    REQUIRE(s <= static_cast<double>(n) + 1e-12);
  }
}

TEST_CASE("generated priorities follow the configured weights") {
  const auto lib = NetworkLibrary::load_directory(test::networks_dir());
  WorkloadParams p;
  p.n = 500;
  std::vector<double> counts(kMaxPriority + 1, 0.0);
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    p.seed = seed;
    for (const auto& t : generate_workload(p, lib, {}).tasks) {
      counts[static_cast<std::size_t>(t.user_priority)] += 1;
      total += 1;
    }
  }
  const auto w = default_priority_weights();
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  double chi2 = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double expected = total * w[i] / wsum;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  CHECK(chi2 < 31.26);  // chi-square, 11 dof, p = 0.001
}

TEST_CASE("MoCA group formation never starves a waiting task") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 25)(rng);
    std::vector<TaskQueueEntry> q(n);
    for (std::size_t i = 0; i < n; ++i) {
      q[i].task_id = static_cast<TaskId>(i);
      q[i].user_priority = std::uniform_int_distribution<int>(0, 11)(rng);
      q[i].estimated_total_cycles = std::uniform_real_distribution<double>(1e3, 1e6)(rng);
      q[i].estimated_avg_bw = std::uniform_real_distribution<double>(0, 16)(rng);
      q[i].dispatch_cycle = 0;
    }
    const double threshold = std::uniform_real_distribution<double>(0, 15)(rng);
    Cycle now = 0;
    std::size_t admitted = 0;
    // Each round one task group runs for a while, then frees all tiles.
    for (int round = 0; round < 10'000 && admitted < n; ++round) {
      score_tasks(q, now, 16.0);
      const auto d = select_group(q, 8, threshold);
      for (const auto& a : d.group) {
        auto& e = *std::find_if(q.begin(), q.end(), [&](const TaskQueueEntry& t) { return t.task_id == a.task_id; });
        REQUIRE(e.status == TaskStatus::Waiting);
        e.status = TaskStatus::Done;
        ++admitted;
      }
      now += 100'000;
    }
    REQUIRE(admitted == n);
  }
}
