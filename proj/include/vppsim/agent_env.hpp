#pragma once

#include <vector>

#include "vppsim/grids.hpp"

namespace vppsim {

// Discrete MDP state of the representative prosumer: storage fraction,
// net-load ratio and hour of day, all on their grids.
struct AgentState {
  double e = 0.0;
  double nd = 0.0;
  int hour = 0;
};

// Grid-side energy fraction of an action, adjusted for storage efficiency:
// discharging delivers eta * drawn energy, charging draws stored / eta.
double efficiency_adjust(double e, double a, double eta);

// e' = clip(e + a, 0, 1) (before grid snapping).
double storage_transition(double e, double a);

// Feasible-action mask at storage level e: -e <= a <= 1 - e, with a small
// tolerance absorbing grid rounding. 0 is always feasible.
std::vector<bool> action_mask(double e, const ActionGrid& grid);

// Single-period net profit, -lmp[hour] * capacity * (Phi + nd).
double reward(const AgentState& s, double a, const std::vector<double>& lmp_profile,
              double bus_capacity, double eta);

struct RegularizerSpec {
  double alpha = 0.1;  // entropy weight, > 0
  // Strong-concavity modulus of the regularized objective; equals alpha for
  // negative entropy with natural logs.
  double rho() const { return alpha; }
};

// Expected reward under an action distribution minus alpha * sum pi log pi
// (0 log 0 = 0).
double regularized_reward(const AgentState& s, const std::vector<double>& action_dist,
                          const ActionGrid& grid, const std::vector<double>& lmp_profile,
                          double bus_capacity, double eta, const RegularizerSpec& reg);

// Mean-profile value at the hour scaled by triangular noise, snapped to the
// hour's net-load grid. Returns the grid index.
int sample_net_load(const NdGrid& grid, const std::vector<double>& hourly_mean,
                    const TriangularSpec& noise, int hour, KeyedRng& rng);

}  // namespace vppsim
