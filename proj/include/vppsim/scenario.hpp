#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vppsim/grids.hpp"
#include "vppsim/meanfield.hpp"
#include "vppsim/network.hpp"

namespace vppsim {

enum class SimMode { FiniteAgent, LimitMeanField };

struct AlgorithmParams {
  double alpha = 0.1;
  double gamma = 0.95;
  double zeta = 0.05;
  double delta = 0.7;
  long t_train = 1200;
  bool persist_q = true;
  double initial_storage = 0.5;
  std::optional<double> flat_belief;  // unset: ED warm start
  KernelAction kernel_action = KernelAction::Incoming;
  double vi_tol = 1e-9;
  bool allow_delta_out_of_band = false;
};

// Renewable unit: per-interval capacity = nameplate * cf_mean[hour] * noise.
struct RenewableSpec {
  int gen = 0;  // index into network.generators
  double nameplate = 0.0;
  std::vector<double> cf_mean;  // length H
  TriangularSpec noise;
};

struct BusSetup {
  PopulationSpec pop;
  ScenarioProfiles profiles;
};

struct SimulationConfig {
  std::string name;
  Network network;
  std::vector<RenewableSpec> renewables;
  std::vector<BusSetup> buses;  // length network.n_buses
  GridSpec grids;
  AlgorithmParams algo;
  int steps_per_day = 12;
  int n_days = 20;
  std::uint64_t seed = 1;
  SimMode mode = SimMode::FiniteAgent;
  bool baseline = false;  // no storage actions, no training
};

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(std::vector<std::string> problems, const std::string& what)
      : std::runtime_error(what), issues(std::move(problems)) {}
  std::vector<std::string> issues;
};

// Parses and validates a scenario. `source` is a filesystem path or the name
// of a bundled scenario ("toy_1bus", "oahu_desk").
SimulationConfig load_scenario(const std::string& source);
SimulationConfig parse_scenario_json(const std::string& text);

std::string scenario_to_json(const SimulationConfig& config);
std::vector<std::string> bundled_scenario_names();
const std::string& bundled_scenario_text(const std::string& name);

// Stable 64-bit hash of the canonical serialized config.
std::uint64_t config_hash(const SimulationConfig& config);

}  // namespace vppsim
