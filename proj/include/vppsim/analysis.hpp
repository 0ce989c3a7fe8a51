#pragma once

#include <cstdint>
#include <vector>

#include "vppsim/scenario.hpp"
#include "vppsim/simulator.hpp"
#include "vppsim/trace.hpp"

namespace vppsim {

// Incremental mean volatility: mean absolute first difference of a price
// series. Throws for series shorter than 2.
double imv(const std::vector<double>& series);

enum class AgentClass { Prosumer, Consumer };

// Ex-post cost of one agent class over one complete day, summed over buses:
// realized LMP times realized net purchase (negative = net revenue).
double daily_cost(const SimulationTrace& trace, AgentClass cls, int day);

// Empirical Theorem-3 constants and the contraction value L1*L_MF*L3 + L2.
struct LipschitzEstimates {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l_lambda = 0.0;
  double l_mf = 0.0;
  double contraction_value = 0.0;
  int lmp_pairs_skipped = 0;
};

LipschitzEstimates estimate_contraction(const SimulationConfig& config, int n_lambda_pairs = 12,
                                        int n_demand_pairs = 400, std::uint64_t seed = 42);

// The three MFE conditions checked on a converged fixed point.
struct MfeVerification {
  bool optimality = false;         // terminal policy equals Gamma1(terminal beliefs)
  bool consistency = false;        // one more Gamma2 step moves the mean field <= tol
  bool price_consistency = false;  // re-solved LMPs match the beliefs per hour
  double policy_gap = 0.0;
  double mf_gap = 0.0;
  double price_gap = 0.0;
  bool all() const { return optimality && consistency && price_consistency; }
};

MfeVerification verify_mfe(const SimulationConfig& config, const MfeResult& result, double tol);

// Per-hour mean and standard deviation of class net demand as capacity
// ratios, over the trailing window of complete days.
struct DemandShapeReport {
  std::vector<double> prosumer_mean, prosumer_std;
  std::vector<double> consumer_mean, consumer_std;
};

DemandShapeReport demand_shape_report(const SimulationTrace& trace, int window_days);

// Least-squares fit of log(values) against the index; r2 measures how
// geometric the decay is.
struct LogLinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LogLinearFit log_linear_fit(const std::vector<double>& values);

// LMP series of one bus over [t_begin, t_end).
std::vector<double> lmp_series(const SimulationTrace& trace, int bus, long t_begin, long t_end);

// Aggregate storage level of one bus over [t_begin, t_end).
std::vector<double> storage_series(const SimulationTrace& trace, int bus, long t_begin,
                                   long t_end);

// Expected demand vector at one hour (zero storage actions), shared by the
// belief warm start and the contraction estimator.
DemandVector expected_demand(const SimulationConfig& config, int hour);

}  // namespace vppsim
