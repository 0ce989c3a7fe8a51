#pragma once

#include <optional>
#include <vector>

#include "vppsim/beliefs.hpp"
#include "vppsim/meanfield.hpp"
#include "vppsim/policy.hpp"
#include "vppsim/scenario.hpp"
#include "vppsim/trace.hpp"

namespace vppsim {

// Mutable per-bus state of a running simulation.
struct BusRuntime {
  TransitionModel model;
  PopulationSpec pop;
  ScenarioProfiles profiles;
  std::vector<double> prosumer_capacity;  // MWh per prosumer
  BeliefVector belief;
  SoftQTable q;
  bool q_initialized = false;
  std::vector<double> prosumer_level;  // grid-valued storage fraction per prosumer
  MeanField mf;                        // limit mode
  double aggregate_level = 0.0;
};

struct SimulatorState {
  SimulationConfig config;
  std::vector<BusRuntime> buses;
};

// Builds runtimes, expands prosumer types into per-agent capacities and
// initializes beliefs (ED warm start with zero actions and expected loads,
// unless the config pins a flat value).
SimulatorState init_simulation(const SimulationConfig& config);

// Per-prosumer outcome of one execution step.
struct AgentStep {
  double pre_level = 0.0;
  double nd_value = 0.0;
  double action = 0.0;
  double grid_flow = 0.0;  // Phi * capacity, MWh drawn from (+) or fed to (-) the grid
  bool regenerated = false;
  double post_level = 0.0;
};

struct BusExecution {
  double demand = 0.0;           // MWh
  double prosumer_energy = 0.0;  // MWh
  double consumer_energy = 0.0;  // MWh
  double aggregate_level = 0.0;  // capacity-weighted post-step storage
  std::vector<AgentStep> agents;
};

struct ExecutionResult {
  std::vector<BusExecution> buses;
  DemandVector demand;
};

// Training phase of one timestep: per-bus policies against current beliefs
// (tabular soft Q-learning in finite-agent mode, exact soft value iteration
// in limit mode, the all-zero-action policy for baseline runs). Buses are
// independent and run in parallel.
std::vector<Policy> run_training_phase(SimulatorState& state, long t);

// Execution phase (finite-agent): samples net loads and actions, applies
// regeneration and storage transitions, aggregates bids. Deterministic for a
// given (config, seed, t) regardless of thread count.
ExecutionResult run_execution_phase(SimulatorState& state, const std::vector<Policy>& policies,
                                    long t);

// Realized network for the interval (renewable capacity draws).
Network realize_network(const SimulatorState& state, long t);

// The full per-timestep loop: training, execution, market clearing, belief
// update. An infeasible ED aborts the run with the timestep recorded.
SimulationTrace run_simulation(const SimulationConfig& config);

// Limit-mean-field fixed-point iteration (Step 1 / Step 2, day over day).
struct MfeResult {
  bool converged = false;
  int days_run = 0;
  std::vector<double> day_distances;                 // |lambda_d - lambda_{d-1}|_1 summed over buses
  std::vector<std::vector<double>> terminal_beliefs;  // per bus, length H
  std::vector<Policy> terminal_policies;
  std::vector<MeanField> terminal_mf;
};

struct MaxDaysExceeded : std::runtime_error {
  MaxDaysExceeded(std::vector<double> norms, const std::string& what)
      : std::runtime_error(what), day_distances(std::move(norms)) {}
  std::vector<double> day_distances;
};

MfeResult run_mfe_iteration(
    const SimulationConfig& config, double tol, int max_days,
    const std::optional<std::vector<std::vector<double>>>& initial_beliefs = std::nullopt,
    bool throw_on_max_days = false);

// Expected consumer ratio sum for one bus-hour (used by limit mode).
double expected_consumer_ratio_sum(const BusSetup& bus, int hour);

}  // namespace vppsim
