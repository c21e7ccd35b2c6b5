#pragma once

#include <cmath>
#include <vector>

#include "liam/errors.hpp"

namespace liam::rl {

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values: the critic's regression target
};

/// Generalised advantage estimation over one environment's segment.
/// `values` carries one extra bootstrap entry past the end; a done flag cuts
/// both the bootstrap and the accumulation at that step. `cut_values`, if
/// non-empty, holds per step the value of the observation reached when an
/// episode was cut by its time limit (NaN elsewhere); those steps still stop
/// the accumulation but bootstrap from that value.
inline AdvantageEstimate gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                        const std::vector<double>& dones, double gamma, double lambda,
                                        const std::vector<double>& cut_values = {}) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || dones.size() != n || (!cut_values.empty() && cut_values.size() != n)) {
    throw DimensionError("gae_advantages: " + std::to_string(n) + " rewards need " + std::to_string(n + 1) +
                         " values and " + std::to_string(n) + " done flags, got " + std::to_string(values.size()) +
                         " and " + std::to_string(dones.size()));
  }
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double live = 1.0 - dones[i];
    double next = values[i + 1] * live;
    if (!cut_values.empty() && !std::isnan(cut_values[i])) next = cut_values[i];
    const double delta = rewards[i] + gamma * next - values[i];
    running = delta + gamma * lambda * live * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

}  // namespace liam::rl
