#include "vppsim/policy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace vppsim {

namespace {
constexpr double kAlphaFloor = 1e-6;
}

double SoftQTable::max_abs_diff(const SoftQTable& other) const {
  double d = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    if (masked[i]) continue;
    d = std::max(d, std::abs(q[i] - other.q[i]));
  }
  return d;
}

double soft_value_row(const SoftQTable& q, int s, const RegularizerSpec& reg) {
  const double alpha = std::max(reg.alpha, kAlphaFloor);
  const int A = q.n_actions;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < A; ++a)
    if (!q.is_masked(s, a)) best = std::max(best, q.at(s, a));
  double acc = 0.0;
  for (int a = 0; a < A; ++a)
    if (!q.is_masked(s, a)) acc += std::exp((q.at(s, a) - best) / alpha);
  return best + alpha * std::log(acc);
}

std::vector<double> soft_values(const SoftQTable& q, const RegularizerSpec& reg) {
  std::vector<double> v(q.n_states);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < q.n_states; ++s) v[s] = soft_value_row(q, s, reg);
  return v;
}

void policy_row_from_q(const SoftQTable& q, int s, const RegularizerSpec& reg,
                       std::span<double> out) {
  const double alpha = std::max(reg.alpha, kAlphaFloor);
  const int A = q.n_actions;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < A; ++a)
    if (!q.is_masked(s, a)) best = std::max(best, q.at(s, a));
  double total = 0.0;
  for (int a = 0; a < A; ++a) {
    if (q.is_masked(s, a)) {
      out[a] = 0.0;
    } else {
      out[a] = std::exp((q.at(s, a) - best) / alpha);
      total += out[a];
    }
  }
  for (int a = 0; a < A; ++a) out[a] /= total;
}

Policy policy_from_q(const SoftQTable& q, const RegularizerSpec& reg) {
  Policy p;
  p.n_states = q.n_states;
  p.n_actions = q.n_actions;
  p.probs.resize(static_cast<size_t>(q.n_states) * q.n_actions);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < q.n_states; ++s)
    policy_row_from_q(q, s, reg,
                      std::span<double>(p.probs.data() + static_cast<size_t>(s) * q.n_actions,
                                        q.n_actions));
  return p;
}

LrSchedule default_lr_schedule() {
  return [](long k) { return 0.5 / (std::pow(static_cast<double>(k), 0.6) + 1.0); };
}

int DenseMdp::sample_next(int s, int a, KeyedRng& rng) const {
  const double* r = kernel_row(s, a);
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < states; ++i) {
    acc += r[i];
    if (u < acc) return i;
  }
  return states - 1;
}

BusMdp::BusMdp(const TransitionModel& m, const std::vector<double>& lmp_profile,
               double bus_capacity, double eta)
    : model(&m) {
  const int S = m.n_states();
  const int A = m.n_actions();
  reward_table.assign(static_cast<size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    const AgentState st = m.grids.state(s);
    for (int a = 0; a < A; ++a)
      reward_table[static_cast<size_t>(s) * A + a] =
          vppsim::reward(st, m.grids.actions.levels[a], lmp_profile, bus_capacity, eta);
  }
}

int soft_vi_iteration_cap(double tol, double gamma) {
  const double base = std::log(std::min(tol, 0.5)) / std::log(gamma);
  return std::max(500, static_cast<int>(10.0 * base));
}

std::vector<double> evaluate_policy_values_dense(
    int S, int A, const std::function<void(int, int, std::span<double>)>& row_fn,
    const std::function<double(int, int)>& reward_fn, const Policy& policy,
    const RegularizerSpec& reg, double gamma) {
  const double alpha = std::max(reg.alpha, kAlphaFloor);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(S);
  std::vector<double> row(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double pi = policy.at(s, a);
      if (pi <= 0.0) continue;
      r_pi(s) += pi * (reward_fn(s, a) - alpha * std::log(pi));
      row_fn(s, a, row);
      for (int t = 0; t < S; ++t) system(s, t) -= gamma * pi * row[t];
    }
  }
  const Eigen::VectorXd v = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(r_pi);
  return std::vector<double>(v.data(), v.data() + S);
}

Gamma1LipschitzEstimate estimate_gamma1_lipschitz(
    const TransitionModel& model, double bus_capacity, double eta, const RegularizerSpec& reg,
    double gamma,
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& lambda_pairs,
    double vi_tol) {
  Gamma1LipschitzEstimate est;
  est.ratios.reserve(lambda_pairs.size());
  for (const auto& [l1, l2] : lambda_pairs) {
    double dl = 0.0;
    for (size_t h = 0; h < l1.size(); ++h) dl += std::abs(l1[h] - l2[h]);
    if (dl <= 0.0) {
      est.ratios.push_back(0.0);
      continue;
    }
    const BusMdp mdp1(model, l1, bus_capacity, eta);
    const BusMdp mdp2(model, l2, bus_capacity, eta);
    const Policy p1 = policy_from_q(soft_value_iteration(mdp1, reg, gamma, vi_tol), reg);
    const Policy p2 = policy_from_q(soft_value_iteration(mdp2, reg, gamma, vi_tol), reg);
    const double ratio = p1.max_row_l1_distance(p2) / dl;
    est.ratios.push_back(ratio);
    est.l1 = std::max(est.l1, ratio);
  }
  return est;
}

double gamma1_lipschitz_bound(double bus_capacity, double eta, const RegularizerSpec& reg,
                              double gamma) {
  const double l_r = bus_capacity * (1.0 / eta + 1.0);
  return (l_r + gamma * l_r / (1.0 - gamma)) / std::max(reg.rho(), kAlphaFloor);
}

}  // namespace vppsim
