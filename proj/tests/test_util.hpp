#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vppsim/dispatch.hpp"
#include "vppsim/network.hpp"
#include "vppsim/rng.hpp"

namespace vppsim::testutil {

inline Network make_network(int n_buses, std::vector<GeneratorSpec> gens,
                            std::vector<LineSpec> lines = {}) {
  Network net;
  net.n_buses = n_buses;
  net.generators = std::move(gens);
  net.lines = std::move(lines);
  net.gens_by_bus.assign(n_buses, {});
  for (int g = 0; g < net.n_gens(); ++g) {
    net.generators[g].id = g;
    net.gens_by_bus[net.generators[g].bus].push_back(g);
  }
  for (int l = 0; l < net.n_lines(); ++l) net.lines[l].id = l;
  return net;
}

// The classic equal-impedance 3-bus triangle (slack at bus 2), with a cheap
// generator at bus 0, an expensive one at bus 2 and load at bus 1.
inline Network triangle_network(double f01) {
  std::vector<LineSpec> lines = {
      {0, {1.0 / 3.0, -1.0 / 3.0, 0.0}, f01},
      {1, {2.0 / 3.0, 1.0 / 3.0, 0.0}, 500.0},
      {2, {1.0 / 3.0, 2.0 / 3.0, 0.0}, 500.0},
  };
  std::vector<GeneratorSpec> gens = {
      {0, 0, 0.01, 10.0, 300.0},
      {1, 2, 0.02, 40.0, 300.0},
  };
  return make_network(3, std::move(gens), std::move(lines));
}

// Random feasible ED instance: limits are calibrated against a feasible
// anchor dispatch, so the instance always admits a solution while still
// congesting at the optimum reasonably often.
struct RandomInstance {
  Network net;
  DemandVector demand;
};

inline RandomInstance random_instance(std::uint64_t seed, bool uncongested = false) {
  KeyedRng rng(seed, Draw::Generic, 7);
  RandomInstance inst;
  const int n_buses = 1 + rng.uniform_int(6);
  const int n_gens = 1 + rng.uniform_int(8);
  const int n_lines = n_buses > 1 ? rng.uniform_int(8) : 0;

  std::vector<GeneratorSpec> gens(n_gens);
  for (int g = 0; g < n_gens; ++g) {
    gens[g].bus = rng.uniform_int(n_buses);
    gens[g].cost_a = rng.uniform(0.002, 0.05);
    gens[g].cost_b = rng.uniform(5.0, 50.0);
    gens[g].p_max = rng.uniform(50.0, 300.0);
  }
  inst.net = make_network(n_buses, std::move(gens));

  double capacity = inst.net.total_capacity();
  inst.demand.d.resize(n_buses);
  for (int n = 0; n < n_buses; ++n) inst.demand.d[n] = rng.uniform(-20.0, 80.0);
  double total = inst.demand.total();
  const double target = rng.uniform(0.1, 0.8) * capacity;
  inst.demand.d[0] += target - total;  // shift to a comfortable total

  // Anchor dispatch: proportional share with a box-preserving perturbation.
  std::vector<double> anchor(inst.net.n_gens());
  const double share = target / capacity;
  for (int g = 0; g < inst.net.n_gens(); ++g) anchor[g] = share * inst.net.generators[g].p_max;
  for (int g = 0; g + 1 < inst.net.n_gens(); g += 2) {
    const double room = std::min({anchor[g], inst.net.generators[g + 1].p_max - anchor[g + 1],
                                  anchor[g + 1], inst.net.generators[g].p_max - anchor[g]});
    const double shift = rng.uniform(-0.9, 0.9) * std::max(0.0, room);
    anchor[g] -= shift;
    anchor[g + 1] += shift;
  }

  for (int l = 0; l < n_lines; ++l) {
    LineSpec line;
    line.id = l;
    line.ptdf.resize(n_buses);
    for (int n = 0; n < n_buses; ++n) line.ptdf[n] = rng.uniform(-1.0, 1.0);
    double flow = 0.0;
    for (int n = 0; n < n_buses; ++n) flow += line.ptdf[n] * inst.demand.d[n];
    for (int g = 0; g < inst.net.n_gens(); ++g)
      flow -= line.ptdf[inst.net.generators[g].bus] * anchor[g];
    const double margin = uncongested ? 100.0 : rng.uniform(1.02, 1.6);
    line.f_max = std::max(1.0, std::abs(flow) * margin);
    inst.net.lines.push_back(line);
  }
  return inst;
}

// Brute-force dispatch oracle for two-generator single-bus instances:
// enumerates gen-0 output on a fixed-resolution grid.
inline double grid_search_dispatch_cost(const Network& net, double total, double resolution,
                                        double* best_p0 = nullptr) {
  const auto& g0 = net.generators[0];
  const auto& g1 = net.generators[1];
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.0;
  const long steps = static_cast<long>(std::round(g0.p_max / resolution));
  for (long i = 0; i <= steps; ++i) {
    const double p0 = static_cast<double>(i) * resolution;
    const double p1 = total - p0;
    if (p1 < 0.0 || p1 > g1.p_max) continue;
    const double cost = g0.cost(p0) + g1.cost(p1);
    if (cost < best) {
      best = cost;
      arg = p0;
    }
  }
  if (best_p0) *best_p0 = arg;
  return best;
}

}  // namespace vppsim::testutil
