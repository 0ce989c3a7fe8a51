#include "vppsim/beliefs.hpp"

#include <cmath>
#include <stdexcept>

namespace vppsim {

BeliefVector update_belief(const BeliefVector& belief, const TimeIndex& t,
                           double realized_lmp) {
  const int h = t.hour();
  if (h < 0 || h >= static_cast<int>(belief.values.size()))
    throw std::out_of_range("hour outside belief vector");
  BeliefVector next = belief;
  const double step = belief.delta / std::sqrt(static_cast<double>(t.day()) + 1.0);
  next.values[h] -= step * (belief.values[h] - realized_lmp);
  return next;
}

bool belief_delta_in_band(double delta) { return delta >= 0.5 && delta <= 1.0; }

}  // namespace vppsim
