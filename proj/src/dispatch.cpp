#include "vppsim/dispatch.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "vppsim/qp.hpp"

namespace vppsim {
namespace {

constexpr double kCapacityTol = 1e-9;
constexpr double kFlowTol = 1e-7;

// Row of d(flow_l)/d(p) and the demand-dependent offset: with the withdrawal
// orientation flow_l = ptdf_l . D - sum_g ptdf_{l,bus(g)} p_g.
struct FlowGeometry {
  Eigen::MatrixXd gen_sensitivity;  // L x G, entry = -PTDF_{l, bus(g)}
  Eigen::VectorXd demand_offset;    // L, entry = ptdf_l . D
};

FlowGeometry flow_geometry(const Network& net, const DemandVector& demand) {
  const int num_gens = net.n_gens();
  const int num_lines = net.n_lines();
  FlowGeometry geo;
  geo.gen_sensitivity = Eigen::MatrixXd::Zero(num_lines, num_gens);
  geo.demand_offset = Eigen::VectorXd::Zero(num_lines);
  for (int l = 0; l < num_lines; ++l) {
    const auto& ptdf = net.lines[l].ptdf;
    for (int g = 0; g < num_gens; ++g)
      geo.gen_sensitivity(l, g) = -ptdf[net.generators[g].bus];
    for (int n = 0; n < net.n_buses; ++n) geo.demand_offset(l) += ptdf[n] * demand.d[n];
  }
  return geo;
}

Eigen::VectorXd line_flows(const FlowGeometry& geo, const Eigen::VectorXd& p) {
  return geo.demand_offset + geo.gen_sensitivity * p;
}

// Proportional dispatch: feasible for balance and box whenever capacity
// suffices (flows unchecked).
Eigen::VectorXd proportional_dispatch(const Network& net, double total) {
  const int num_gens = net.n_gens();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(num_gens);
  const double cap = net.total_capacity();
  if (cap <= 0.0) return p;
  const double share = std::clamp(total / cap, 0.0, 1.0);
  for (int g = 0; g < num_gens; ++g) p(g) = share * net.generators[g].p_max;
  // Fix rounding: dump any imbalance into generators with headroom.
  double imbalance = total - p.sum();
  for (int g = 0; g < num_gens && std::abs(imbalance) > 1e-12; ++g) {
    const double room = imbalance > 0 ? net.generators[g].p_max - p(g) : p(g);
    const double move = std::clamp(imbalance, -room, room);
    p(g) += move;
    imbalance -= move;
  }
  return p;
}

// Inequality block layout for the main QP: [flow_hi (L), flow_lo (L),
// gen_hi (G), gen_lo (G)].
qp::Problem build_main_problem(const Network& net, const DemandVector& demand,
                               const FlowGeometry& geo) {
  const int num_gens = net.n_gens();
  const int num_lines = net.n_lines();
  qp::Problem prob;
  prob.q_diag = Eigen::VectorXd(num_gens);
  prob.c = Eigen::VectorXd(num_gens);
  for (int g = 0; g < num_gens; ++g) {
    prob.q_diag(g) = 2.0 * net.generators[g].cost_a;
    prob.c(g) = net.generators[g].cost_b;
  }
  prob.eq_row = Eigen::VectorXd::Ones(num_gens);
  prob.eq_rhs = demand.total();

  const int m = 2 * num_lines + 2 * num_gens;
  prob.ineq_rows = Eigen::MatrixXd::Zero(m, num_gens);
  prob.ineq_rhs = Eigen::VectorXd::Zero(m);
  for (int l = 0; l < num_lines; ++l) {
    // flow <= f_max
    prob.ineq_rows.row(l) = geo.gen_sensitivity.row(l);
    prob.ineq_rhs(l) = net.lines[l].f_max - geo.demand_offset(l);
    // -flow <= f_max
    prob.ineq_rows.row(num_lines + l) = -geo.gen_sensitivity.row(l);
    prob.ineq_rhs(num_lines + l) = net.lines[l].f_max + geo.demand_offset(l);
  }
  for (int g = 0; g < num_gens; ++g) {
    prob.ineq_rows(2 * num_lines + g, g) = 1.0;
    prob.ineq_rhs(2 * num_lines + g) = net.generators[g].p_max;
    prob.ineq_rows(2 * num_lines + num_gens + g, g) = -1.0;
    prob.ineq_rhs(2 * num_lines + num_gens + g) = 0.0;
  }
  return prob;
}

// Phase 1: minimize squared flow slack over (p, s). Re-centering the tiny
// proximal term on p removes its bias, so the fixed point is a genuine
// minimum-violation dispatch.
Eigen::VectorXd restore_flow_feasibility(const Network& net, const DemandVector& demand,
                                         const FlowGeometry& geo, const Eigen::VectorXd& p_start,
                                         int max_iterations) {
  const int num_gens = net.n_gens();
  const int num_lines = net.n_lines();
  const int n = num_gens + num_lines;

  Eigen::VectorXd center = p_start;
  Eigen::VectorXd p = p_start;
  double prev_slack = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 100; ++round) {
    qp::Problem prob;
    // Proximal weight 1e-3 keeps the Schur system well conditioned; the
    // re-centering rounds remove the bias it would otherwise introduce.
    prob.q_diag = Eigen::VectorXd::Constant(n, 1.0);
    prob.q_diag.head(num_gens).setConstant(1e-3);
    prob.c = Eigen::VectorXd::Zero(n);
    prob.c.head(num_gens) = -1e-3 * center;
    prob.eq_row = Eigen::VectorXd::Zero(n);
    prob.eq_row.head(num_gens).setOnes();
    prob.eq_rhs = demand.total();

    const int m = 2 * num_lines + 2 * num_gens + num_lines;
    prob.ineq_rows = Eigen::MatrixXd::Zero(m, n);
    prob.ineq_rhs = Eigen::VectorXd::Zero(m);
    for (int l = 0; l < num_lines; ++l) {
      prob.ineq_rows.row(l).head(num_gens) = geo.gen_sensitivity.row(l);
      prob.ineq_rows(l, num_gens + l) = -1.0;
      prob.ineq_rhs(l) = net.lines[l].f_max - geo.demand_offset(l);
      prob.ineq_rows.row(num_lines + l).head(num_gens) = -geo.gen_sensitivity.row(l);
      prob.ineq_rows(num_lines + l, num_gens + l) = -1.0;
      prob.ineq_rhs(num_lines + l) = net.lines[l].f_max + geo.demand_offset(l);
    }
    for (int g = 0; g < num_gens; ++g) {
      prob.ineq_rows(2 * num_lines + g, g) = 1.0;
      prob.ineq_rhs(2 * num_lines + g) = net.generators[g].p_max;
      prob.ineq_rows(2 * num_lines + num_gens + g, g) = -1.0;
    }
    for (int l = 0; l < num_lines; ++l)
      prob.ineq_rows(2 * num_lines + 2 * num_gens + l, num_gens + l) = -1.0;

    Eigen::VectorXd z0(n);
    z0.head(num_gens) = p;
    const Eigen::VectorXd flows = line_flows(geo, p);
    for (int l = 0; l < num_lines; ++l)
      z0(num_gens + l) = std::max(0.0, std::abs(flows(l)) - net.lines[l].f_max);

    const qp::Solution sol = qp::solve(prob, z0, max_iterations);
    p = sol.x.head(num_gens);
    const double max_slack = sol.x.tail(num_lines).maxCoeff();
    // Proximal-point iteration on the generator block: stop once feasible or
    // once the slack stops improving (true minimum-violation certificate).
    if (max_slack <= kFlowTol * 0.01 || max_slack >= prev_slack - 1e-12 * (1.0 + max_slack))
      break;
    prev_slack = max_slack;
    center = p;
  }
  return p;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

namespace {

// Generators with zero capacity (dark solar hours) make their own box
// constraints coincident and break LICQ; they are pinned to zero outside the
// QP and their duals recovered from stationarity afterwards.
EDSolution solve_ed_reduced(const Network& net, const DemandVector& demand,
                            const EdOptions& opts);

}  // namespace

EDSolution solve_ed(const Network& net, const DemandVector& demand, const EdOptions& opts) {
  bool has_empty = false;
  for (const auto& g : net.generators) has_empty |= g.p_max <= 1e-12;
  if (!has_empty) return solve_ed_reduced(net, demand, opts);

  Network reduced = net;
  reduced.generators.clear();
  reduced.gens_by_bus.assign(net.n_buses, {});
  std::vector<int> original_index;
  for (const auto& g : net.generators) {
    if (g.p_max <= 1e-12) continue;
    GeneratorSpec copy = g;
    copy.id = reduced.n_gens();
    reduced.gens_by_bus[copy.bus].push_back(copy.id);
    reduced.generators.push_back(copy);
    original_index.push_back(g.id);
  }

  const EDSolution inner = solve_ed_reduced(reduced, demand, opts);
  EDSolution sol;
  sol.hub_price = inner.hub_price;
  sol.line_duals_lo = inner.line_duals_lo;
  sol.line_duals_hi = inner.line_duals_hi;
  sol.lmps = inner.lmps;
  sol.objective = inner.objective;
  sol.iterations = inner.iterations;
  sol.dispatch.assign(net.n_gens(), 0.0);
  sol.gen_duals_lo.assign(net.n_gens(), 0.0);
  sol.gen_duals_hi.assign(net.n_gens(), 0.0);
  for (size_t k = 0; k < original_index.size(); ++k) {
    sol.dispatch[original_index[k]] = inner.dispatch[k];
    sol.gen_duals_lo[original_index[k]] = inner.gen_duals_lo[k];
    sol.gen_duals_hi[original_index[k]] = inner.gen_duals_hi[k];
  }
  for (const auto& g : net.generators) {
    if (g.p_max > 1e-12) continue;
    const double gap = sol.lmps[g.bus] - g.marginal_cost(0.0);
    sol.gen_duals_hi[g.id] = std::max(0.0, gap);
    sol.gen_duals_lo[g.id] = std::max(0.0, -gap);
  }
  return sol;
}

namespace {

EDSolution solve_ed_reduced(const Network& net, const DemandVector& demand,
                            const EdOptions& opts) {
  const int num_gens = net.n_gens();
  const int num_lines = net.n_lines();
  const double total = demand.total();

  InfeasibleCertificate cert;
  cert.total_demand = total;
  cert.total_capacity = net.total_capacity();
  if (total < -kCapacityTol) {
    cert.kind = InfeasibleCertificate::Kind::NegativeTotalDemand;
    throw InfeasibleError(cert, "total demand is negative");
  }
  if (cert.total_capacity < total - kCapacityTol) {
    cert.kind = InfeasibleCertificate::Kind::CapacityShortfall;
    throw InfeasibleError(cert, "total capacity below total demand");
  }
  if (num_gens == 0) {
    EDSolution empty;
    empty.lmps.assign(net.n_buses, 0.0);
    empty.line_duals_lo.assign(num_lines, 0.0);
    empty.line_duals_hi.assign(num_lines, 0.0);
    return empty;
  }

  const FlowGeometry geo = flow_geometry(net, demand);
  const int cap = opts.iteration_cap_factor * (num_gens + num_lines);

  Eigen::VectorXd p0 = proportional_dispatch(net, total);
  if (num_lines > 0) {
    const Eigen::VectorXd flows = line_flows(geo, p0);
    bool violated = false;
    for (int l = 0; l < num_lines; ++l)
      violated |= std::abs(flows(l)) > net.lines[l].f_max + kFlowTol;
    if (violated) {
      p0 = restore_flow_feasibility(net, demand, geo, p0, cap);
      const Eigen::VectorXd restored = line_flows(geo, p0);
      std::vector<double> residuals(num_lines, 0.0);
      double worst = 0.0;
      for (int l = 0; l < num_lines; ++l) {
        residuals[l] = std::max(0.0, std::abs(restored(l)) - net.lines[l].f_max);
        worst = std::max(worst, residuals[l]);
      }
      if (worst > kFlowTol) {
        cert.kind = InfeasibleCertificate::Kind::FlowRestoration;
        cert.line_residuals = residuals;
        throw InfeasibleError(cert, "no flow-feasible dispatch found");
      }
    }
  }

  const qp::Problem prob = build_main_problem(net, demand, geo);
  const qp::Solution qsol = qp::solve(prob, p0, cap);

  EDSolution sol;
  sol.dispatch = to_std(qsol.x);
  sol.hub_price = qsol.eq_dual;
  sol.line_duals_hi.assign(num_lines, 0.0);
  sol.line_duals_lo.assign(num_lines, 0.0);
  sol.gen_duals_hi.assign(num_gens, 0.0);
  sol.gen_duals_lo.assign(num_gens, 0.0);
  for (int l = 0; l < num_lines; ++l) {
    sol.line_duals_hi[l] = qsol.ineq_duals(l);
    sol.line_duals_lo[l] = qsol.ineq_duals(num_lines + l);
  }
  for (int g = 0; g < num_gens; ++g) {
    sol.gen_duals_hi[g] = qsol.ineq_duals(2 * num_lines + g);
    sol.gen_duals_lo[g] = qsol.ineq_duals(2 * num_lines + num_gens + g);
  }
  sol.lmps = compute_lmps(net, sol.hub_price, sol.line_duals_lo, sol.line_duals_hi);
  sol.objective = 0.0;
  for (int g = 0; g < num_gens; ++g) sol.objective += net.generators[g].cost(qsol.x(g));
  sol.iterations = qsol.iterations;
  return sol;
}

}  // namespace

std::vector<double> compute_lmps(const Network& net, double hub_price,
                                 const std::vector<double>& line_duals_lo,
                                 const std::vector<double>& line_duals_hi) {
  std::vector<double> lmps(net.n_buses, hub_price);
  for (int n = 0; n < net.n_buses; ++n) {
    double congestion = 0.0;
    for (int l = 0; l < net.n_lines(); ++l)
      congestion += net.lines[l].ptdf[n] * (line_duals_lo[l] - line_duals_hi[l]);
    lmps[n] = hub_price - congestion;
  }
  return lmps;
}

double kkt_residual(const Network& net, const DemandVector& demand, const EDSolution& sol) {
  const int num_gens = net.n_gens();
  const int num_lines = net.n_lines();
  double r = 0.0;

  // Stationarity: dC_g/dp = lmp(bus) - nu_hi + nu_lo for every generator.
  for (int g = 0; g < num_gens; ++g) {
    const auto& gen = net.generators[g];
    const double grad = gen.marginal_cost(sol.dispatch[g]) - sol.lmps[gen.bus] +
                        sol.gen_duals_hi[g] - sol.gen_duals_lo[g];
    r = std::max(r, std::abs(grad));
  }

  // Primal feasibility.
  double balance = -demand.total();
  for (int g = 0; g < num_gens; ++g) balance += sol.dispatch[g];
  r = std::max(r, std::abs(balance));
  for (int g = 0; g < num_gens; ++g) {
    r = std::max(r, sol.dispatch[g] - net.generators[g].p_max);
    r = std::max(r, -sol.dispatch[g]);
  }
  std::vector<double> flows(num_lines, 0.0);
  for (int l = 0; l < num_lines; ++l) {
    for (int n = 0; n < net.n_buses; ++n) flows[l] += net.lines[l].ptdf[n] * demand.d[n];
    for (int g = 0; g < num_gens; ++g)
      flows[l] -= net.lines[l].ptdf[net.generators[g].bus] * sol.dispatch[g];
    r = std::max(r, std::abs(flows[l]) - net.lines[l].f_max);
  }

  // Dual feasibility and complementary slackness.
  for (int l = 0; l < num_lines; ++l) {
    r = std::max(r, -sol.line_duals_lo[l]);
    r = std::max(r, -sol.line_duals_hi[l]);
    if (sol.line_duals_hi[l] != 0.0)
      r = std::max(r, std::abs(sol.line_duals_hi[l] * (net.lines[l].f_max - flows[l])));
    if (sol.line_duals_lo[l] != 0.0)
      r = std::max(r, std::abs(sol.line_duals_lo[l] * (net.lines[l].f_max + flows[l])));
  }
  for (int g = 0; g < num_gens; ++g) {
    r = std::max(r, -sol.gen_duals_lo[g]);
    r = std::max(r, -sol.gen_duals_hi[g]);
    r = std::max(r, std::abs(sol.gen_duals_hi[g] * (net.generators[g].p_max - sol.dispatch[g])));
    r = std::max(r, std::abs(sol.gen_duals_lo[g] * sol.dispatch[g]));
  }
  return r;
}

double lmp_sensitivity_oracle(const Network& net, const DemandVector& demand, int bus,
                              double h, const EdOptions& opts) {
  DemandVector up = demand;
  DemandVector down = demand;
  up.d[bus] += h;
  down.d[bus] -= h;
  const double obj_up = solve_ed(net, up, opts).objective;
  const double obj_down = solve_ed(net, down, opts).objective;
  return (obj_up - obj_down) / (2.0 * h);
}

LmpLipschitzEstimate estimate_lmp_lipschitz(const Network& net, const DemandPairSampler& sampler,
                                            int n_pairs, std::uint64_t seed,
                                            const EdOptions& opts) {
  LmpLipschitzEstimate est;
  est.ratios.reserve(n_pairs);
  for (int k = 0; k < n_pairs; ++k) {
    KeyedRng rng(seed, Draw::Generic, k);
    const auto [d1, d2] = sampler(rng);
    double dd = 0.0;
    for (size_t i = 0; i < d1.d.size(); ++i) dd += std::abs(d1.d[i] - d2.d[i]);
    if (dd <= 0.0) {
      est.ratios.push_back(0.0);
      continue;
    }
    try {
      const EDSolution s1 = solve_ed(net, d1, opts);
      const EDSolution s2 = solve_ed(net, d2, opts);
      double dl = 0.0;
      for (int n = 0; n < net.n_buses; ++n) dl = std::max(dl, std::abs(s1.lmps[n] - s2.lmps[n]));
      est.ratios.push_back(dl / dd);
      est.l_lambda = std::max(est.l_lambda, dl / dd);
    } catch (const InfeasibleError&) {
      ++est.infeasible_skipped;
    }
  }
  return est;
}

}  // namespace vppsim
