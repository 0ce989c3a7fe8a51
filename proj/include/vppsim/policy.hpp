#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "vppsim/agent_env.hpp"
#include "vppsim/mdp.hpp"

namespace vppsim {

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Entropy-regularized Q-values over the state-action grid. Masked entries
// are excluded from every soft-max and never read.
struct SoftQTable {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.0;
  std::vector<double> q;            // s * A + a
  std::vector<std::uint8_t> masked; // s * A + a

  double at(int s, int a) const { return q[static_cast<size_t>(s) * n_actions + a]; }
  double& at(int s, int a) { return q[static_cast<size_t>(s) * n_actions + a]; }
  bool is_masked(int s, int a) const { return masked[static_cast<size_t>(s) * n_actions + a] != 0; }

  template <class Model>
  static SoftQTable zeros(const Model& model, double gamma) {
    SoftQTable t;
    t.n_states = model.n_states();
    t.n_actions = model.n_actions();
    t.gamma = gamma;
    t.q.assign(static_cast<size_t>(t.n_states) * t.n_actions, 0.0);
    t.masked.resize(t.q.size());
    for (int s = 0; s < t.n_states; ++s)
      for (int a = 0; a < t.n_actions; ++a)
        t.masked[static_cast<size_t>(s) * t.n_actions + a] = model.masked(s, a) ? 1 : 0;
    return t;
  }

  double max_abs_diff(const SoftQTable& other) const;
};

// Soft state value V(s) = alpha * log sum_a exp(q(s,a)/alpha) over unmasked
// actions (log-sum-exp with max subtraction).
double soft_value_row(const SoftQTable& q, int s, const RegularizerSpec& reg);
std::vector<double> soft_values(const SoftQTable& q, const RegularizerSpec& reg);

// Softmax policy over unmasked actions; the exact maximizer of
// <pi, q(s,.)> - Omega(pi) for the negative-entropy regularizer.
void policy_row_from_q(const SoftQTable& q, int s, const RegularizerSpec& reg,
                       std::span<double> out);
Policy policy_from_q(const SoftQTable& q, const RegularizerSpec& reg);

// Learning-rate schedule for tabular Q-learning, as a function of the
// per-(s,a) visit count k >= 1.
using LrSchedule = std::function<double(long)>;
LrSchedule default_lr_schedule();  // 0.5 / (k^0.6 + 1)

// Generic dense MDP, used by tests and small verification problems.
struct DenseMdp {
  int states = 0;
  int actions = 0;
  std::vector<double> rewards;       // s * A + a
  std::vector<std::uint8_t> masks;   // s * A + a, 1 = masked
  std::vector<double> kernel;        // (s * A + a) * S + s'

  int n_states() const { return states; }
  int n_actions() const { return actions; }
  bool masked(int s, int a) const { return masks[static_cast<size_t>(s) * actions + a] != 0; }
  double reward(int s, int a) const { return rewards[static_cast<size_t>(s) * actions + a]; }

  const double* kernel_row(int s, int a) const {
    return kernel.data() + (static_cast<size_t>(s) * actions + a) * states;
  }
  void row(int s, int a, std::span<double> out) const {
    const double* r = kernel_row(s, a);
    for (int i = 0; i < states; ++i) out[i] = r[i];
  }

  struct SweepCache {
    const std::vector<double>* value = nullptr;
  };
  SweepCache make_sweep_cache(const std::vector<double>& value) const { return {&value}; }
  double expected_next(int s, int a, const SweepCache& cache) const {
    const double* r = kernel_row(s, a);
    double acc = 0.0;
    for (int i = 0; i < states; ++i) acc += r[i] * (*cache.value)[i];
    return acc;
  }
  int sample_next(int s, int a, KeyedRng& rng) const;
};

// The per-bus training MDP: domain transition kernel plus the reward induced
// by an LMP profile. Rewards are tabulated once at construction.
struct BusMdp {
  const TransitionModel* model = nullptr;
  std::vector<double> reward_table;  // s * A + a

  BusMdp() = default;
  BusMdp(const TransitionModel& m, const std::vector<double>& lmp_profile,
         double bus_capacity, double eta);

  int n_states() const { return model->n_states(); }
  int n_actions() const { return model->n_actions(); }
  bool masked(int s, int a) const { return model->masked(s, a); }
  double reward(int s, int a) const {
    return reward_table[static_cast<size_t>(s) * n_actions() + a];
  }
  void row(int s, int a, std::span<double> out) const { model->row(s, a, out); }

  using SweepCache = TransitionModel::SweepCache;
  SweepCache make_sweep_cache(const std::vector<double>& value) const {
    return model->make_sweep_cache(value);
  }
  double expected_next(int s, int a, const SweepCache& cache) const {
    return model->expected_next(s, a, cache);
  }
  int sample_next(int s, int a, KeyedRng& rng) const { return model->sample_next(s, a, rng); }
};

// One application of the soft Bellman operator,
//   q'(s,a) = r(s,a) + gamma * E[V(s') | s,a],
// parallel over states (each row written by exactly one thread).
template <class Model>
void bellman_sweep(const Model& model, const RegularizerSpec& reg, double gamma,
                   const SoftQTable& in, SoftQTable& out) {
  const std::vector<double> v = soft_values(in, reg);
  const auto cache = model.make_sweep_cache(v);
  const int S = model.n_states();
  const int A = model.n_actions();
#pragma omp parallel for schedule(static)
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (in.is_masked(s, a)) continue;
      out.at(s, a) = model.reward(s, a) + gamma * model.expected_next(s, a, cache);
    }
  }
}

// Serial reference sweep over materialized kernel rows.
template <class Model>
void bellman_sweep_ref(const Model& model, const RegularizerSpec& reg, double gamma,
                       const SoftQTable& in, SoftQTable& out) {
  const std::vector<double> v = soft_values(in, reg);
  const int S = model.n_states();
  const int A = model.n_actions();
  std::vector<double> row(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (in.is_masked(s, a)) continue;
      model.row(s, a, row);
      double acc = 0.0;
      for (int i = 0; i < S; ++i) acc += row[i] * v[i];
      out.at(s, a) = model.reward(s, a) + gamma * acc;
    }
  }
}

// Iteration cap from the contraction rate with a safety factor of 10.
int soft_vi_iteration_cap(double tol, double gamma);

// Fixed point of the soft Bellman operator to within tol in sup-norm.
template <class Model>
SoftQTable soft_value_iteration(const Model& model, const RegularizerSpec& reg, double gamma,
                                double tol, const SoftQTable* warm_start = nullptr,
                                bool use_reference_sweep = false) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  SoftQTable q = warm_start ? *warm_start : SoftQTable::zeros(model, gamma);
  q.gamma = gamma;
  SoftQTable next = q;
  const double stop = gamma > 0.0 ? tol * (1.0 - gamma) / gamma
                                  : std::numeric_limits<double>::infinity();
  const int cap = soft_vi_iteration_cap(tol, gamma);
  for (int it = 0; it < cap; ++it) {
    if (use_reference_sweep)
      bellman_sweep_ref(model, reg, gamma, q, next);
    else
      bellman_sweep(model, reg, gamma, q, next);
    const double diff = q.max_abs_diff(next);
    std::swap(q.q, next.q);
    if (diff <= stop) return q;
  }
  throw NonConvergenceError("soft value iteration exceeded its iteration cap");
}

// Tabular soft Q-learning along one sampled trajectory: TD target is
// r + gamma * soft-value(s'), exploration follows the softmax policy of the
// current table. Deterministic given the RNG.
template <class Model>
SoftQTable soft_q_learning(const Model& model, const RegularizerSpec& reg, double gamma,
                           long t_train, const LrSchedule& lr, KeyedRng& rng, int start_state,
                           const SoftQTable* warm_start = nullptr) {
  SoftQTable q = warm_start ? *warm_start : SoftQTable::zeros(model, gamma);
  q.gamma = gamma;
  const int A = model.n_actions();
  std::vector<long> visits(q.q.size(), 0);
  std::vector<double> pi(A);
  int s = start_state;
  for (long step = 0; step < t_train; ++step) {
    policy_row_from_q(q, s, reg, pi);
    const double u = rng.uniform();
    double acc = 0.0;
    int a = 0;
    for (int i = 0; i < A; ++i) {
      acc += pi[i];
      if (u < acc) {
        a = i;
        break;
      }
      if (i + 1 == A) a = i;
    }
    // Skip masked picks defensively (probability zero by construction).
    if (model.masked(s, a)) {
      for (int i = 0; i < A; ++i)
        if (!model.masked(s, i)) {
          a = i;
          break;
        }
    }
    const int s_next = model.sample_next(s, a, rng);
    const double target = model.reward(s, a) + gamma * soft_value_row(q, s_next, reg);
    const long k = ++visits[static_cast<size_t>(s) * A + a];
    q.at(s, a) += lr(k) * (target - q.at(s, a));
    s = s_next;
  }
  return q;
}

// Exact regularized value of a policy from s0: solves the linear
// policy-evaluation system directly.
template <class Model>
double evaluate_policy(const Policy& policy, const Model& model, const RegularizerSpec& reg,
                       double gamma, int s0) {
  return evaluate_policy_values(policy, model, reg, gamma)[s0];
}

std::vector<double> evaluate_policy_values_dense(
    int S, int A, const std::function<void(int, int, std::span<double>)>& row_fn,
    const std::function<double(int, int)>& reward_fn, const Policy& policy,
    const RegularizerSpec& reg, double gamma);

template <class Model>
std::vector<double> evaluate_policy_values(const Policy& policy, const Model& model,
                                           const RegularizerSpec& reg, double gamma) {
  return evaluate_policy_values_dense(
      model.n_states(), model.n_actions(),
      [&model](int s, int a, std::span<double> out) { model.row(s, a, out); },
      [&model](int s, int a) { return model.reward(s, a); }, policy, reg, gamma);
}

// Empirical Lipschitz constant of the LMP-profile -> optimal-policy map.
struct Gamma1LipschitzEstimate {
  double l1 = 0.0;
  std::vector<double> ratios;
};

Gamma1LipschitzEstimate estimate_gamma1_lipschitz(
    const TransitionModel& model, double bus_capacity, double eta, const RegularizerSpec& reg,
    double gamma,
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& lambda_pairs,
    double vi_tol = 1e-10);

// Upper bound (1/rho) (L_r + gamma L_r / (1 - gamma)) with
// L_r = capacity * (1/eta + 1).
double gamma1_lipschitz_bound(double bus_capacity, double eta, const RegularizerSpec& reg,
                              double gamma);

}  // namespace vppsim
