#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "moca/errors.hpp"
#include "moca/workload.hpp"

using namespace moca;

TEST_CASE("conv dims give total_mac by hand product") {
  const auto net = parse_network(R"({
    "name": "one", "element_bytes": 1,
    "layers": [{"name": "conv1", "kind": "COMPUTE",
                "dims": {"in_h": 224, "in_w": 224, "in_c": 3, "out_h": 112, "out_w": 112, "out_c": 64,
                         "k_h": 7, "k_w": 7}}]})");
  REQUIRE(net.layers.size() == 1);
  const std::uint64_t oracle = 112ull * 112 * 64 * 7 * 7 * 3;
  CHECK(oracle == 118'013'952ull);
  CHECK(net.layers[0].total_mac == oracle);
  CHECK(net.layers[0].weight_bytes == 7ull * 7 * 3 * 64);
  CHECK(net.layers[0].output_bytes == 112ull * 112 * 64);
}

TEST_CASE("empty network is rejected") {
  CHECK_THROWS_AS(parse_network(R"({"name": "e", "layers": []})"), ValidationError);
}

TEST_CASE("residual add carries two operands and no MACs") {
  const auto net = parse_network(R"({"name": "r", "layers": [
    {"name": "add", "kind": "MEM", "input_bytes": 802816, "input_b_bytes": 802816, "output_bytes": 802816}]})");
  const auto& l = net.layers[0];
  CHECK(l.kind == LayerKind::Mem);
  CHECK(l.input_bytes == 802'816);
  CHECK(l.input_b_bytes == 802'816);
  CHECK(l.total_mac == 0);
}

TEST_CASE("bad layer kind names the field") {
  try {
    parse_network(R"({"name": "bad", "layers": [{"name": "x", "kind": "CONVOLVE", "total_mac": 4}]})");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("kind") != std::string::npos);
  }
}

TEST_CASE("malformed JSON reports a line") {
  try {
    parse_network("{\n\"name\": \"x\",\n\"layers\": [\n{,]}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("COMPUTE layer with a second operand is invalid") {
  LayerDesc l = test::compute_layer("c", 10, 1, 1, 1);
  l.input_b_bytes = 5;
  CHECK_THROWS_AS(l.validate(), ValidationError);
}

TEST_CASE("shipped networks load") {
  const auto lib = NetworkLibrary::load_directory(test::networks_dir());
  for (WorkloadSet s : {WorkloadSet::A, WorkloadSet::B, WorkloadSet::C})
    for (const auto& n : workload_set_members(s)) CHECK_MESSAGE(lib.contains(n), n);
  CHECK(lib.get("resnet50")->layers.front().total_mac == 118'013'952ull);
}

TEST_CASE("missing network directory is a config error") {
  CHECK_THROWS_AS(NetworkLibrary::load_directory("/nonexistent/networks"), ConfigError);
}

namespace {

const NetworkLibrary& lib() {
  static const NetworkLibrary l = NetworkLibrary::load_directory(test::networks_dir());
  return l;
}

WorkloadParams small(std::uint64_t seed, std::size_t n, WorkloadSet set, QosLevel level) {
  WorkloadParams p;
  p.seed = seed;
  p.n = n;
  p.set = set;
  p.qos_level = level;
  p.allow_any_n = true;
  return p;
}

}  // namespace

TEST_CASE("same seed gives the same scenario") {
  const auto a = generate_workload(small(1, 5, WorkloadSet::A, QosLevel::M), lib(), {});
  const auto b = generate_workload(small(1, 5, WorkloadSet::A, QosLevel::M), lib(), {});
  REQUIRE(a.tasks.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a.tasks[i].network->name == b.tasks[i].network->name);
    CHECK(a.tasks[i].dispatch_cycle == b.tasks[i].dispatch_cycle);
    CHECK(a.tasks[i].user_priority == b.tasks[i].user_priority);
    CHECK(a.tasks[i].qos_target_cycles == b.tasks[i].qos_target_cycles);
  }
}

TEST_CASE("QoS-H targets are 0.8/1.2 of QoS-L targets") {
  const auto h = generate_workload(small(7, 40, WorkloadSet::C, QosLevel::H), lib(), {});
  const auto l = generate_workload(small(7, 40, WorkloadSet::C, QosLevel::L), lib(), {});
  CHECK(qos_multiplier(QosLevel::L) == 1.2);
  CHECK(qos_multiplier(QosLevel::M) == 1.0);
  CHECK(qos_multiplier(QosLevel::H) == 0.8);
  for (std::size_t i = 0; i < h.tasks.size(); ++i) {
    REQUIRE(h.tasks[i].network == l.tasks[i].network);
    const double ratio = static_cast<double>(h.tasks[i].qos_target_cycles) / static_cast<double>(l.tasks[i].qos_target_cycles);
    CHECK(ratio == doctest::Approx(0.8 / 1.2).epsilon(1e-6));
  }
}

TEST_CASE("dispatch times are non-decreasing and priorities in range") {
  const auto sc = generate_workload(small(3, 200, WorkloadSet::C, QosLevel::M), lib(), {});
  for (std::size_t i = 0; i < sc.tasks.size(); ++i) {
    CHECK(sc.tasks[i].task_id == i);
    CHECK(sc.tasks[i].user_priority >= 0);
    CHECK(sc.tasks[i].user_priority <= kMaxPriority);
    if (i) CHECK(sc.tasks[i].dispatch_cycle >= sc.tasks[i - 1].dispatch_cycle);
  }
}

TEST_CASE("every set-C network appears across a seed sweep") {
  std::map<std::string, int> seen;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    WorkloadParams p = small(seed, 250, WorkloadSet::C, QosLevel::M);
    p.allow_any_n = false;
    for (const auto& t : generate_workload(p, lib(), {}).tasks) ++seen[t.network->name];
  }
  // Uniform choice over 7 networks: 12,500 draws, expected 1,785.7 each.
  double chi2 = 0;
  const double expected = 250.0 * 50 / 7;
  for (const auto& n : workload_set_members(WorkloadSet::C)) {
    CHECK(seen[n] > 0);
    chi2 += std::pow(seen[n] - expected, 2) / expected;
  }
  CHECK(chi2 < 22.46);  // chi-square, 6 dof, p = 0.001
}

TEST_CASE("task count outside 200..500 needs the override") {
  WorkloadParams p = small(1, 50, WorkloadSet::A, QosLevel::M);
  p.allow_any_n = false;
  CHECK_THROWS_AS(generate_workload(p, lib(), {}), ConfigError);
}
