#pragma once

#include <span>
#include <vector>

#include "vppsim/agent_env.hpp"
#include "vppsim/grids.hpp"

namespace vppsim {

// Discrete state space: (storage level, net-load point, hour), flattened as
// s = hour * (E * ND) + e_idx * ND + nd_idx.
struct MdpGrids {
  StorageGrid storage;
  ActionGrid actions;
  NdGrid nd;
  int hours = 0;

  int n_states() const { return hours * storage.size() * nd.n_points; }
  int n_actions() const { return actions.size(); }

  int state_index(int e_idx, int nd_idx, int hour) const {
    return hour * storage.size() * nd.n_points + e_idx * nd.n_points + nd_idx;
  }
  int e_index(int s) const { return (s % (storage.size() * nd.n_points)) / nd.n_points; }
  int nd_index(int s) const { return s % nd.n_points; }
  int hour_of(int s) const { return s / (storage.size() * nd.n_points); }

  AgentState state(int s) const {
    const int h = hour_of(s);
    return AgentState{storage.levels[e_index(s)], nd.value(h, nd_index(s)), h};
  }

  static MdpGrids build(const GridSpec& spec, const std::vector<double>& prosumer_nd_mean,
                        const TriangularSpec& noise);
};

// State transition kernel P(s' | s, a), composed from the deterministic
// (snapped) storage transition with zeta-probability uniform regeneration,
// the hour increment, and the per-hour net-load distribution.
struct TransitionModel {
  MdpGrids grids;
  double zeta = 0.0;
  std::vector<int> e_next;        // [e_idx * A + a_idx] snapped successor
  std::vector<bool> feasible;     // [e_idx * A + a_idx] action mask

  int n_states() const { return grids.n_states(); }
  int n_actions() const { return grids.n_actions(); }

  bool masked(int s, int a) const { return !feasible[grids.e_index(s) * n_actions() + a]; }

  // Dense kernel entry (reference path).
  double prob(int s_next, int s, int a) const;

  // Materialize one kernel row (reference path and policy evaluation).
  void row(int s, int a, std::span<double> out) const;

  int sample_next(int s, int a, KeyedRng& rng) const;

  // Per-sweep cache for the factored expected-value path: b(e', h') is the
  // nd-averaged value and b_mean(h') its storage-uniform average.
  struct SweepCache {
    std::vector<double> b;       // [h * E + e]
    std::vector<double> b_mean;  // [h]
  };
  SweepCache make_sweep_cache(const std::vector<double>& value) const;
  double expected_next(int s, int a, const SweepCache& cache) const;
};

TransitionModel build_transition_model(const MdpGrids& grids, double zeta);

// State-conditional action distribution; rows sum to 1 and are exactly zero
// on masked actions.
struct Policy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;  // s * A + a

  double at(int s, int a) const { return probs[s * n_actions + a]; }
  double& at(int s, int a) { return probs[s * n_actions + a]; }

  static Policy deterministic(const TransitionModel& model, int action_idx);
  double max_row_l1_distance(const Policy& other) const;
};

}  // namespace vppsim
