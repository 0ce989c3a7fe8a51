#include "vppsim/agent_env.hpp"

#include <algorithm>
#include <cmath>

namespace vppsim {

double efficiency_adjust(double e, double a, double eta) {
  if (a < 0.0) return std::max(-e, a) * eta;
  return std::min(1.0 - e, a) / eta;
}

double storage_transition(double e, double a) {
  return std::max(std::min(e + a, 1.0), 0.0);
}

std::vector<bool> action_mask(double e, const ActionGrid& grid) {
  constexpr double tol = 1e-9;
  std::vector<bool> mask(grid.levels.size(), false);
  for (size_t i = 0; i < grid.levels.size(); ++i) {
    const double a = grid.levels[i];
    mask[i] = (a >= -e - tol && a <= 1.0 - e + tol) || a == 0.0;
  }
  return mask;
}

double reward(const AgentState& s, double a, const std::vector<double>& lmp_profile,
              double bus_capacity, double eta) {
  return -lmp_profile[s.hour] * bus_capacity * (efficiency_adjust(s.e, a, eta) + s.nd);
}

double regularized_reward(const AgentState& s, const std::vector<double>& action_dist,
                          const ActionGrid& grid, const std::vector<double>& lmp_profile,
                          double bus_capacity, double eta, const RegularizerSpec& reg) {
  double value = 0.0;
  double neg_entropy = 0.0;
  for (size_t i = 0; i < action_dist.size(); ++i) {
    const double p = action_dist[i];
    if (p <= 0.0) continue;
    value += p * reward(s, grid.levels[i], lmp_profile, bus_capacity, eta);
    neg_entropy += p * std::log(p);
  }
  return value - reg.alpha * neg_entropy;
}

int sample_net_load(const NdGrid& grid, const std::vector<double>& hourly_mean,
                    const TriangularSpec& noise, int hour, KeyedRng& rng) {
  const double raw = hourly_mean[hour] * noise.sample(rng);
  return grid.snap(hour, raw);
}

}  // namespace vppsim
