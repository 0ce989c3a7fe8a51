#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vppsim/network.hpp"
#include "vppsim/rng.hpp"

namespace vppsim {

// Machine-readable infeasibility certificate for an ED instance.
struct InfeasibleCertificate {
  enum class Kind { CapacityShortfall, NegativeTotalDemand, FlowRestoration };
  Kind kind = Kind::CapacityShortfall;
  double total_demand = 0.0;
  double total_capacity = 0.0;
  // FlowRestoration: residual violation per line after the phase-1 solve.
  std::vector<double> line_residuals;
};

struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(InfeasibleCertificate c, const std::string& what)
      : std::runtime_error(what), certificate(std::move(c)) {}
  InfeasibleCertificate certificate;
};

struct EdOptions {
  double kkt_tol = 1e-8;
  // Iteration cap: 50 * (G + L) active-set steps.
  int iteration_cap_factor = 50;
};

// Solves the single-interval economic dispatch QP and extracts all duals and
// per-bus LMPs. Line flows are oriented as PTDF * (withdrawal): flow_l =
// sum_n PTDF_ln (D_n - gen_n), with line_duals_lo/hi attached to the
// -f_max / +f_max sides, so that
//   lmps[n] = hub_price - sum_l PTDF_ln (mu_lo_l - mu_hi_l)
// equals the marginal system cost of demand at bus n.
EDSolution solve_ed(const Network& net, const DemandVector& demand,
                    const EdOptions& opts = {});

// LMPs from the duals alone (the congestion-adjustment formula, bit-exact).
std::vector<double> compute_lmps(const Network& net, double hub_price,
                                 const std::vector<double>& line_duals_lo,
                                 const std::vector<double>& line_duals_hi);

// Max KKT residual (stationarity, primal and dual feasibility,
// complementary slackness) of a claimed solution; independent of the solver.
double kkt_residual(const Network& net, const DemandVector& demand,
                    const EDSolution& sol);

// Central-difference marginal system cost of demand at one bus,
//   (obj(D + h e_n) - obj(D - h e_n)) / (2h).
double lmp_sensitivity_oracle(const Network& net, const DemandVector& demand,
                              int bus, double h, const EdOptions& opts = {});

// Empirical Lipschitz constant of the demand -> LMP map.
struct LmpLipschitzEstimate {
  double l_lambda = 0.0;         // max over pairs and buses of |dlmp| / |dD|_1
  std::vector<double> ratios;    // one per usable pair
  int infeasible_skipped = 0;
};

using DemandPairSampler = std::function<std::pair<DemandVector, DemandVector>(KeyedRng&)>;

LmpLipschitzEstimate estimate_lmp_lipschitz(const Network& net,
                                            const DemandPairSampler& sampler,
                                            int n_pairs, std::uint64_t seed,
                                            const EdOptions& opts = {});

}  // namespace vppsim
