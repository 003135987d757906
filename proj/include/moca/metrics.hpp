#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "moca/simcore.hpp"

namespace moca {

enum class PriorityGroup { Low = 0, Mid = 1, High = 2 };

/// p-Low 0..2, p-Mid 3..8, p-High 9..11.
PriorityGroup priority_group(int priority);
std::string_view to_string(PriorityGroup g);

struct SlaRates {
  double overall = 0;
  std::array<double, 3> by_group{};         // NaN for an empty group
  std::array<std::size_t, 3> group_size{};
};

SlaRates sla_rate(std::span<const TaskResult> tasks);

using IsolatedMap = std::map<TaskId, Cycle>;

double stp(std::span<const TaskResult> tasks, const IsolatedMap& isolated);

struct FairnessResult {
  double fairness = 1.0;
  std::vector<double> pp;
  bool defined = true;  // false for fewer than two tasks
};

/// Proportional progress with the given priority weights (used as is).
FairnessResult fairness(std::span<const double> c_single, std::span<const double> c_mt,
                        std::span<const double> weights);

/// Same, from simulation results; weights are priority + 1.
FairnessResult fairness(std::span<const TaskResult> tasks, const IsolatedMap& isolated);

struct MetricsReport {
  SlaRates sla;
  double stp = 0;
  FairnessResult fairness;
};

MetricsReport compute_metrics(std::span<const TaskResult> tasks, const IsolatedMap& isolated);

}  // namespace moca
