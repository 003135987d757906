#include "moca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace moca {

PriorityGroup priority_group(int priority) {
  if (priority <= 2) return PriorityGroup::Low;
  if (priority <= 8) return PriorityGroup::Mid;
  return PriorityGroup::High;
}

std::string_view to_string(PriorityGroup g) {
  switch (g) {
    case PriorityGroup::Low: return "p-Low";
    case PriorityGroup::Mid: return "p-Mid";
    case PriorityGroup::High: return "p-High";
  }
  return "?";
}

SlaRates sla_rate(std::span<const TaskResult> tasks) {
  if (tasks.empty()) throw std::invalid_argument("sla_rate: empty result set");
  SlaRates r;
  std::array<std::size_t, 3> met{};
  std::size_t total_met = 0;
  for (const auto& t : tasks) {
    const bool ok = t.end_to_end_cycles <= t.qos_target_cycles;
    const auto g = static_cast<std::size_t>(priority_group(t.priority));
    ++r.group_size[g];
    if (ok) {
      ++met[g];
      ++total_met;
    }
  }
  r.overall = static_cast<double>(total_met) / static_cast<double>(tasks.size());
  for (std::size_t g = 0; g < 3; ++g)
    r.by_group[g] = r.group_size[g] ? static_cast<double>(met[g]) / static_cast<double>(r.group_size[g])
                                    : std::numeric_limits<double>::quiet_NaN();
  return r;
}

namespace {
Cycle isolated_for(const IsolatedMap& isolated, TaskId id) {
  auto it = isolated.find(id);
  if (it == isolated.end()) throw std::invalid_argument("missing isolated latency for task " + std::to_string(id));
  return it->second;
}
}  // namespace

double stp(std::span<const TaskResult> tasks, const IsolatedMap& isolated) {
  double sum = 0;
  for (const auto& t : tasks)
    sum += static_cast<double>(isolated_for(isolated, t.task_id)) / static_cast<double>(std::max<Cycle>(1, t.end_to_end_cycles));
  return sum;
}

FairnessResult fairness(std::span<const double> c_single, std::span<const double> c_mt,
                        std::span<const double> weights) {
  if (c_single.size() != c_mt.size() || c_single.size() != weights.size())
    throw std::invalid_argument("fairness: length mismatch");
  FairnessResult r;
  double wsum = 0;
  for (double w : weights) {
    if (!(w > 0)) throw std::invalid_argument("fairness: priority weights must be > 0");
    wsum += w;
  }
  for (std::size_t i = 0; i < weights.size(); ++i) r.pp.push_back((c_single[i] / c_mt[i]) / (weights[i] / wsum));
  if (r.pp.size() < 2) {
    r.defined = false;
    r.fairness = 1.0;
    return r;
  }
  const auto [lo, hi] = std::minmax_element(r.pp.begin(), r.pp.end());
  r.fairness = *lo / *hi;
  return r;
}

FairnessResult fairness(std::span<const TaskResult> tasks, const IsolatedMap& isolated) {
  std::vector<double> single, mt, w;
  for (const auto& t : tasks) {
    single.push_back(static_cast<double>(isolated_for(isolated, t.task_id)));
    mt.push_back(static_cast<double>(std::max<Cycle>(1, t.end_to_end_cycles)));
    w.push_back(static_cast<double>(t.priority) + 1.0);
  }
  return fairness(single, mt, w);
}

MetricsReport compute_metrics(std::span<const TaskResult> tasks, const IsolatedMap& isolated) {
  MetricsReport m;
  m.sla = sla_rate(tasks);
  m.stp = stp(tasks, isolated);
  m.fairness = fairness(tasks, isolated);
  return m;
}

}  // namespace moca
