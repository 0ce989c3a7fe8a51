#pragma once

#include <vector>

#include "vppsim/grids.hpp"

namespace vppsim {

// Length-H running estimate of hourly LMPs, updated by stochastic
// approximation with step delta / sqrt(day + 1).
struct BeliefVector {
  std::vector<double> values;  // $/MWh, length H
  double delta = 0.7;          // learning rate, in [0.5, 1] unless overridden
};

// Returns the updated belief: only the hour(t) entry changes,
//   v[h] <- v[h] - delta / sqrt(day(t) + 1) * (v[h] - realized_lmp).
BeliefVector update_belief(const BeliefVector& belief, const TimeIndex& t,
                           double realized_lmp);

// True iff delta lies in the recommended [0.5, 1] band.
bool belief_delta_in_band(double delta);

}  // namespace vppsim
