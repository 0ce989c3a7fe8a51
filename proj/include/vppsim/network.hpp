#pragma once

#include <string>
#include <vector>

namespace vppsim {

// Bulk generator with quadratic cost C(p) = cost_a * p^2 + cost_b * p and
// capacity p_max (MWh per interval). cost_a must be strictly positive so the
// dispatch problem stays strongly convex; renewables are modeled with a
// vanishing cost_a and per-interval p_max equal to realized availability.
struct GeneratorSpec {
  int id = 0;
  int bus = 0;
  double cost_a = 0.0;  // $/MWh^2
  double cost_b = 0.0;  // $/MWh
  double p_max = 0.0;   // MWh per interval

  double marginal_cost(double p) const { return 2.0 * cost_a * p + cost_b; }
  double cost(double p) const { return (cost_a * p + cost_b) * p; }
};

// Transmission line described by one PTDF row (sensitivity of its flow to a
// net withdrawal at each bus) and a symmetric flow limit f_max.
struct LineSpec {
  int id = 0;
  std::vector<double> ptdf;  // length n_buses
  double f_max = 0.0;        // MWh per interval
};

struct Network {
  int n_buses = 0;
  std::vector<LineSpec> lines;
  std::vector<GeneratorSpec> generators;
  std::vector<std::vector<int>> gens_by_bus;  // partition of generator ids

  int n_lines() const { return static_cast<int>(lines.size()); }
  int n_gens() const { return static_cast<int>(generators.size()); }
  double total_capacity() const {
    double s = 0.0;
    for (const auto& g : generators) s += g.p_max;
    return s;
  }
};

// Net demand per bus (MWh per interval). Entries may be negative, the total
// must be nonnegative.
struct DemandVector {
  std::vector<double> d;

  double total() const {
    double s = 0.0;
    for (double x : d) s += x;
    return s;
  }
};

// Primal/dual output of one economic dispatch solve. Line and generator
// duals are attached to the lower/upper side of their constraint; lmps[n]
// is the hub price adjusted by the congestion components.
struct EDSolution {
  std::vector<double> dispatch;       // length G
  double hub_price = 0.0;             // dual of the power balance
  std::vector<double> line_duals_lo;  // length L, flow at -f_max
  std::vector<double> line_duals_hi;  // length L, flow at +f_max
  std::vector<double> gen_duals_lo;   // length G, p at 0
  std::vector<double> gen_duals_hi;   // length G, p at p_max
  std::vector<double> lmps;           // length N
  double objective = 0.0;             // $
  int iterations = 0;
};

// Returns an empty list iff the network satisfies all type invariants; each
// violation names the offending element.
std::vector<std::string> validate_network(const Network& net);

}  // namespace vppsim
