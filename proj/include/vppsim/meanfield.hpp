#pragma once

#include <vector>

#include "vppsim/mdp.hpp"

namespace vppsim {

// Joint state-action distribution of the prosumer population at one bus.
struct MeanField {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> mass;  // s * A + a, nonnegative, sums to 1

  double at(int s, int a) const { return mass[static_cast<size_t>(s) * n_actions + a]; }
  double& at(int s, int a) { return mass[static_cast<size_t>(s) * n_actions + a]; }

  static MeanField uniform(int n_states, int n_actions);
  static MeanField point_mass(int n_states, int n_actions, int s, int a);

  double sum() const;
  double l1_distance(const MeanField& other) const;
};

// Which action the kernel is conditioned on inside the consistency update:
// the incoming action a' (the update formula as displayed) or the outgoing
// action a (marginalizing the old action), kept as a sensitivity variant.
enum class KernelAction { Incoming, Outgoing };

// One consistency-operator step:
//   out(s',a') = zeta / (|S||A|)
//              + (1 - zeta) sum_{s,a} mf(s,a) P(s'|s,a') pi(a'|s).
// OpenMP-parallel over output slices; each entry is written exactly once so
// results are identical for any thread count.
MeanField consistency_update(const MeanField& mf, const Policy& policy,
                             const TransitionModel& model, double zeta,
                             KernelAction convention = KernelAction::Incoming);

// Serial dense-kernel reference of the same map, for tests and benchmarks.
MeanField consistency_update_ref(const MeanField& mf, const Policy& policy,
                                 const TransitionModel& model, double zeta,
                                 KernelAction convention = KernelAction::Incoming);

// Bus demand bid implied by a mean field:
//   E_bar * sum_{s,a} mf(s,a) (Phi(e(s), a, eta) + nd(s))
//   + consumer_ref_capacity * consumer_ratio_sum.
double meanfield_to_demand(const MeanField& mf, const TransitionModel& model,
                           const PopulationSpec& pop, double consumer_ratio_sum);

// Capacity-weighted average storage level.
double aggregate_storage(const std::vector<double>& levels,
                         const std::vector<double>& capacities);

}  // namespace vppsim
