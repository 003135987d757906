#include "moca/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "moca/errors.hpp"
#include "moca/estimator.hpp"

namespace moca {

using nlohmann::json;

std::string_view to_string(LayerKind kind) { return kind == LayerKind::Compute ? "COMPUTE" : "MEM"; }

std::string_view to_string(WorkloadSet set) {
  switch (set) {
    case WorkloadSet::A: return "A";
    case WorkloadSet::B: return "B";
    case WorkloadSet::C: return "C";
  }
  return "?";
}

std::string_view to_string(QosLevel level) {
  switch (level) {
    case QosLevel::L: return "L";
    case QosLevel::M: return "M";
    case QosLevel::H: return "H";
  }
  return "?";
}

WorkloadSet parse_workload_set(std::string_view text) {
  if (text == "A") return WorkloadSet::A;
  if (text == "B") return WorkloadSet::B;
  if (text == "C") return WorkloadSet::C;
  throw ConfigError("unknown workload set '" + std::string(text) + "' (expected A, B or C)");
}

QosLevel parse_qos_level(std::string_view text) {
  if (text == "L") return QosLevel::L;
  if (text == "M") return QosLevel::M;
  if (text == "H") return QosLevel::H;
  throw ConfigError("unknown QoS level '" + std::string(text) + "' (expected L, M or H)");
}

double qos_multiplier(QosLevel level) {
  switch (level) {
    case QosLevel::L: return 1.2;
    case QosLevel::M: return 1.0;
    case QosLevel::H: return 0.8;
  }
  return 1.0;
}

std::vector<std::string> workload_set_members(WorkloadSet set) {
  std::vector<std::string> light = {"squeezenet", "yolo_lite", "kws"};
  std::vector<std::string> heavy = {"googlenet", "alexnet", "resnet50", "yolov2"};
  switch (set) {
    case WorkloadSet::A: return light;
    case WorkloadSet::B: return heavy;
    case WorkloadSet::C: break;
  }
  light.insert(light.end(), heavy.begin(), heavy.end());
  return light;
}

// ---------------------------------------------------------------------------
// Validation

void LayerDesc::validate() const {
  const auto fail = [this](const std::string& msg) {
    throw ValidationError("layer '" + name + "': " + msg);
  };
  if (name.empty()) throw ValidationError("layer with empty name");
  if (kind == LayerKind::Compute && total_mac == 0) fail("COMPUTE layer requires total_mac > 0");
  if (kind == LayerKind::Mem && total_mac != 0) fail("MEM layer must have total_mac == 0");
  if (kind == LayerKind::Compute && input_b_bytes != 0) fail("input_b_bytes > 0 is only allowed on MEM layers");
  if (tiling_factor < 1) fail("tiling_factor must be >= 1");
}

void NetworkDesc::validate() const {
  if (name.empty()) throw ValidationError("network with empty name");
  if (layers.empty()) throw ValidationError("network '" + name + "': must contain at least one layer");
  for (const auto& l : layers) l.validate();
}

void SocConfig::validate() const {
  if (num_tiles == 0 || pes_per_tile == 0 || scratchpad_bytes_per_tile == 0 ||
      accumulator_bytes_per_tile == 0 || l2_bytes == 0 || l2_banks == 0 || pipeline_chunks == 0)
    throw ValidationError("SoC counts and sizes must be > 0");
  if (!(dram_bw_bytes_per_cycle > 0) || !(l2_bw_bytes_per_cycle > 0) || !(frequency_hz > 0))
    throw ValidationError("SoC bandwidths and frequency must be > 0");
  if (!(overlap_f > 0 && overlap_f < 1)) throw ValidationError("overlap_f must lie in (0, 1)");
  if (dram_bw_bytes_per_cycle > l2_bw_bytes_per_cycle)
    throw ValidationError("dram_bw must not exceed l2_bw");
}

void TaskSpec::validate() const {
  if (!network) throw ValidationError("task " + std::to_string(task_id) + " has no network");
  if (user_priority < 0 || user_priority > kMaxPriority)
    throw ValidationError("task " + std::to_string(task_id) + ": user_priority outside 0..11");
  if (qos_target_cycles == 0) throw ValidationError("task " + std::to_string(task_id) + ": qos_target_cycles must be > 0");
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::uint64_t get_u64(const json& obj, const char* key, std::uint64_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
    throw ValidationError(std::string("field '") + key + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

LayerDesc parse_layer(const json& j, std::uint64_t elem, const SocConfig& soc) {
  if (!j.is_object()) throw ValidationError("layer entry must be an object");
  LayerDesc l;
  l.name = j.value("name", std::string{});
  if (l.name.empty()) throw ValidationError("layer entry missing 'name'");
  try {
    const std::string kind = j.value("kind", std::string{});
    if (kind == "COMPUTE")
      l.kind = LayerKind::Compute;
    else if (kind == "MEM")
      l.kind = LayerKind::Mem;
    else
      throw ValidationError("kind must be COMPUTE or MEM, got '" + kind + "'");

    if (auto d = j.find("dims"); d != j.end()) {
      if (!d->is_object()) throw ValidationError("'dims' must be an object");
      const auto out_h = get_u64(*d, "out_h", 1), out_w = get_u64(*d, "out_w", 1);
      const auto out_c = get_u64(*d, "out_c", 0);
      const auto in_h = get_u64(*d, "in_h", out_h), in_w = get_u64(*d, "in_w", out_w);
      const auto in_c = get_u64(*d, "in_c", out_c);
      if (out_c == 0 || in_c == 0) throw ValidationError("dims require out_c and in_c > 0");
      l.input_bytes = in_h * in_w * in_c * elem;
      l.output_bytes = out_h * out_w * out_c * elem;
      if (l.kind == LayerKind::Compute) {
        const auto k_h = get_u64(*d, "k_h", 1), k_w = get_u64(*d, "k_w", 1);
        const auto groups = get_u64(*d, "groups", 1);
        if (groups == 0 || in_c % groups != 0) throw ValidationError("groups must divide in_c");
        const auto in_c_per_group = in_c / groups;
        l.total_mac = out_h * out_w * out_c * k_h * k_w * in_c_per_group;
        l.weight_bytes = k_h * k_w * in_c_per_group * out_c * elem;
        l.bias_bytes = get_u64(*d, "bias", 1) ? out_c * elem : 0;
      } else {
        const auto operands = get_u64(*d, "operands", 1);
        if (operands < 1 || operands > 2) throw ValidationError("MEM dims 'operands' must be 1 or 2");
        if (operands == 2) l.input_b_bytes = l.input_bytes;
      }
    }
    l.total_mac = get_u64(j, "total_mac", l.total_mac);
    l.weight_bytes = get_u64(j, "weight_bytes", l.weight_bytes);
    l.input_bytes = get_u64(j, "input_bytes", l.input_bytes);
    l.input_b_bytes = get_u64(j, "input_b_bytes", l.input_b_bytes);
    l.output_bytes = get_u64(j, "output_bytes", l.output_bytes);
    l.bias_bytes = get_u64(j, "bias_bytes", l.bias_bytes);

    const Bytes working_set = l.weight_bytes + l.input_bytes + l.input_b_bytes + l.output_bytes + l.bias_bytes;
    const std::uint64_t default_tf = std::max<std::uint64_t>(1, ceil_div(working_set, soc.scratchpad_bytes_per_tile));
    l.tiling_factor = get_u64(j, "tiling_factor", default_tf);
    if (l.tiling_factor == 0) throw ValidationError("tiling_factor must be >= 1");
    l.tile_bytes = get_u64(j, "tile_bytes", ceil_div(working_set, l.tiling_factor));
  } catch (const ValidationError& e) {
    throw ValidationError("layer '" + l.name + "': " + e.what());
  } catch (const json::exception& e) {
    throw ValidationError("layer '" + l.name + "': " + e.what());
  }
  l.validate();
  return l;
}

}  // namespace

NetworkDesc parse_network(std::string_view text, const SocConfig& soc) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network description: ") + e.what(), line_of_byte(text, e.byte ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw ValidationError("network description must be a JSON object");
  NetworkDesc net;
  try {
    net.name = doc.value("name", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("network 'name': ") + e.what());
  }
  const std::uint64_t elem = get_u64(doc, "element_bytes", 1);
  if (elem == 0) throw ValidationError("element_bytes must be > 0");
  auto layers = doc.find("layers");
  if (layers == doc.end() || !layers->is_array())
    throw ValidationError("network '" + net.name + "': 'layers' must be an array");
  for (const auto& lj : *layers) net.layers.push_back(parse_layer(lj, elem, soc));
  net.validate();
  return net;
}

NetworkDesc load_network(const std::filesystem::path& path, const SocConfig& soc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open network file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_network(buf.str(), soc);
  } catch (const ParseError& e) {
    throw ParseError(path.filename().string() + ": " + e.what(), 0);
  } catch (const ValidationError& e) {
    throw ValidationError(path.filename().string() + ": " + e.what());
  }
}

NetworkLibrary NetworkLibrary::load_directory(const std::filesystem::path& dir, const SocConfig& soc) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("network directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  NetworkLibrary lib;
  for (const auto& f : files) lib.add(load_network(f, soc));
  return lib;
}

void NetworkLibrary::add(NetworkDesc net) {
  auto name = net.name;
  nets_[name] = std::make_shared<const NetworkDesc>(std::move(net));
}

std::shared_ptr<const NetworkDesc> NetworkLibrary::get(const std::string& name) const {
  auto it = nets_.find(name);
  if (it == nets_.end()) throw ConfigError("network '" + name + "' not loaded");
  return it->second;
}

// ---------------------------------------------------------------------------
// Generation

std::vector<double> default_priority_weights() {
  std::vector<double> w(kMaxPriority + 1);
  for (int p = 0; p <= kMaxPriority; ++p) w[static_cast<std::size_t>(p)] = std::pow(0.8, p);
  return w;
}

void WorkloadParams::validate() const {
  if (n == 0) throw ConfigError("task count must be > 0");
  if (!allow_any_n && (n < min_n || n > max_n))
    throw ConfigError("task count " + std::to_string(n) + " outside [" + std::to_string(min_n) + ", " +
                      std::to_string(max_n) + "]; set allow_any_n to override");
  if (!(qos_k > 0)) throw ConfigError("qos_k must be > 0");
  if (!(arrival_scale > 0)) throw ConfigError("arrival_scale must be > 0");
  if (priority_weights.size() != kMaxPriority + 1)
    throw ConfigError("priority_weights must have 12 entries (priorities 0..11)");
  double sum = 0;
  for (double w : priority_weights) {
    if (!(w >= 0)) throw ConfigError("priority weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0)) throw ConfigError("priority weights must not all be zero");
}

double baseline_qos_cycles(const NetworkDesc& net, const SocConfig& soc, double qos_k) {
  return qos_k * static_cast<double>(estimate_network(net, soc, soc.num_tiles).total_cycles);
}

WorkloadScenario generate_workload(const WorkloadParams& params, const NetworkLibrary& lib, const SocConfig& soc) {
  params.validate();
  soc.validate();

  std::vector<std::shared_ptr<const NetworkDesc>> nets;
  std::vector<double> baseline;
  double mean_isolated = 0;
  for (const auto& name : workload_set_members(params.set)) {
    nets.push_back(lib.get(name));
    baseline.push_back(baseline_qos_cycles(*nets.back(), soc, 1.0));
    mean_isolated += baseline.back();
  }
  mean_isolated /= static_cast<double>(nets.size());

  std::mt19937_64 rng(params.seed);
  std::exponential_distribution<double> gap(1.0 / (params.arrival_scale * mean_isolated));
  std::uniform_int_distribution<std::size_t> pick(0, nets.size() - 1);
  std::discrete_distribution<int> prio(params.priority_weights.begin(), params.priority_weights.end());

  WorkloadScenario sc;
  sc.workload_set = params.set;
  sc.qos_level = params.qos_level;
  sc.seed = params.seed;
  sc.tasks.reserve(params.n);
  const double mult = qos_multiplier(params.qos_level);
  double t = 0;
  for (std::size_t i = 0; i < params.n; ++i) {
    t += gap(rng);
    const std::size_t which = pick(rng);
    TaskSpec task;
    task.task_id = static_cast<TaskId>(i);
    task.network = nets[which];
    task.dispatch_cycle = static_cast<Cycle>(std::llround(t));
    task.user_priority = prio(rng);
    task.qos_target_cycles = static_cast<Cycle>(std::ceil(mult * params.qos_k * baseline[which]));
    sc.tasks.push_back(std::move(task));
  }
  return sc;
}

}  // namespace moca
