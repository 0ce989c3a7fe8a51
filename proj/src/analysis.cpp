#include "vppsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vppsim/dispatch.hpp"

namespace vppsim {

double imv(const std::vector<double>& series) {
  if (series.size() < 2) throw std::invalid_argument("imv needs at least two samples");
  double acc = 0.0;
  for (size_t i = 0; i + 1 < series.size(); ++i) acc += std::abs(series[i + 1] - series[i]);
  return acc / static_cast<double>(series.size() - 1);
}

double daily_cost(const SimulationTrace& trace, AgentClass cls, int day) {
  double acc = 0.0;
  long found = 0;
  for (const auto& r : trace.records) {
    if (r.day != day) continue;
    acc += cls == AgentClass::Prosumer ? r.cost_prosumer : r.cost_consumer;
    ++found;
  }
  if (found != static_cast<long>(trace.steps_per_day) * trace.n_buses)
    throw std::invalid_argument("day not complete in trace");
  return acc;
}

DemandVector expected_demand(const SimulationConfig& config, int hour) {
  DemandVector demand;
  demand.d.resize(config.network.n_buses);
  for (int n = 0; n < config.network.n_buses; ++n) {
    const BusSetup& bus = config.buses[n];
    demand.d[n] = bus.pop.total_capacity * bus.profiles.prosumer_nd_mean[hour] *
                      bus.profiles.prosumer_noise.mean() +
                  bus.pop.consumer_ref_capacity * expected_consumer_ratio_sum(bus, hour);
  }
  return demand;
}

LipschitzEstimates estimate_contraction(const SimulationConfig& config, int n_lambda_pairs,
                                        int n_demand_pairs, std::uint64_t seed) {
  LipschitzEstimates est;
  est.l2 = 1.0 - config.algo.zeta;
  est.l3 = 1.0 - config.algo.zeta;

  // Empirical L1 over all buses: pairs of perturbed warm-start beliefs.
  SimulatorState state = init_simulation(config);
  const RegularizerSpec reg{config.algo.alpha};
  for (int n = 0; n < config.network.n_buses; ++n) {
    const BusRuntime& bus = state.buses[n];
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    KeyedRng rng(seed, Draw::Generic, 100 + n);
    for (int k = 0; k < n_lambda_pairs; ++k) {
      std::vector<double> a = bus.belief.values;
      std::vector<double> b = bus.belief.values;
      // Half the pairs differ in one hour only, half everywhere.
      if (k % 2 == 0) {
        b[rng.uniform_int(config.steps_per_day)] += rng.uniform(0.01, 1.0);
      } else {
        for (int h = 0; h < config.steps_per_day; ++h) {
          a[h] += rng.uniform(-2.0, 2.0);
          b[h] += rng.uniform(-2.0, 2.0);
        }
      }
      pairs.emplace_back(std::move(a), std::move(b));
    }
    const auto g1 = estimate_gamma1_lipschitz(bus.model, bus.pop.total_capacity,
                                              bus.pop.efficiency, reg, config.algo.gamma, pairs,
                                              config.algo.vi_tol);
    est.l1 = std::max(est.l1, g1.l1);
  }

  // Empirical L_lambda around the scenario's expected operating range.
  const int H = config.steps_per_day;
  const auto sampler = [&config, H](KeyedRng& rng) {
    const int hour = rng.uniform_int(H);
    DemandVector base = expected_demand(config, hour);
    DemandVector a = base, b = base;
    for (size_t n = 0; n < base.d.size(); ++n) {
      const double scale = 0.25 * (std::abs(base.d[n]) + 0.1);
      a.d[n] += rng.uniform(-scale, scale);
      b.d[n] += rng.uniform(-scale, scale);
    }
    return std::make_pair(a, b);
  };
  // The hour only sets the renewable availability snapshot; hour 0 keeps the
  // network fixed across pairs as the estimator expects.
  Network net = config.network;
  for (const auto& rs : config.renewables)
    net.generators[rs.gen].p_max =
        std::max(0.0, rs.nameplate * rs.cf_mean[0] * rs.noise.mean());
  const auto lmp_est = estimate_lmp_lipschitz(net, sampler, n_demand_pairs, seed);
  est.l_lambda = lmp_est.l_lambda;
  est.lmp_pairs_skipped = lmp_est.infeasible_skipped;

  double max_capacity = 0.0;
  for (const auto& b : config.buses) max_capacity = std::max(max_capacity, b.pop.total_capacity);
  est.l_mf = est.l_lambda * max_capacity;
  est.contraction_value = est.l1 * est.l_mf * est.l3 + est.l2;
  return est;
}

MfeVerification verify_mfe(const SimulationConfig& config, const MfeResult& result, double tol) {
  MfeVerification v;
  const int N = config.network.n_buses;
  const int H = config.steps_per_day;

  // Fresh state pinned to the terminal beliefs; policies recomputed from a
  // zero-initialized table exercise the uniqueness of Gamma1.
  SimulatorState state = init_simulation(config);
  for (int n = 0; n < N; ++n) {
    state.buses[n].belief.values = result.terminal_beliefs[n];
    state.buses[n].mf = result.terminal_mf[n];
  }
  const std::vector<Policy> fresh = run_training_phase(state, 0);

  v.policy_gap = 0.0;
  for (int n = 0; n < N; ++n)
    v.policy_gap = std::max(v.policy_gap, fresh[n].max_row_l1_distance(result.terminal_policies[n]));
  v.optimality = v.policy_gap <= 1e-6;

  v.mf_gap = 0.0;
  for (int n = 0; n < N; ++n) {
    const MeanField next = consistency_update(result.terminal_mf[n], fresh[n],
                                              state.buses[n].model, config.algo.zeta,
                                              config.algo.kernel_action);
    v.mf_gap = std::max(v.mf_gap, next.l1_distance(result.terminal_mf[n]));
  }
  v.consistency = v.mf_gap <= tol;

  // One more day of Gamma2 + market clearing against the terminal beliefs.
  v.price_gap = 0.0;
  for (int h = 0; h < H; ++h) {
    DemandVector demand;
    demand.d.assign(N, 0.0);
    for (int n = 0; n < N; ++n) {
      BusRuntime& bus = state.buses[n];
      bus.mf = consistency_update(bus.mf, fresh[n], bus.model, config.algo.zeta,
                                  config.algo.kernel_action);
      demand.d[n] = meanfield_to_demand(bus.mf, bus.model, bus.pop,
                                        expected_consumer_ratio_sum(config.buses[n], h));
    }
    const EDSolution sol = solve_ed(realize_network(state, h), demand);
    for (int n = 0; n < N; ++n)
      v.price_gap = std::max(v.price_gap,
                             std::abs(sol.lmps[n] - result.terminal_beliefs[n][h]));
  }
  v.price_consistency = v.price_gap <= tol;
  return v;
}

DemandShapeReport demand_shape_report(const SimulationTrace& trace, int window_days) {
  const int H = trace.steps_per_day;
  const int total_days = static_cast<int>(trace.n_steps() / H);
  if (window_days > total_days) throw std::invalid_argument("window longer than the trace");
  const int first_day = total_days - window_days;

  double prosumer_capacity = 0.0, consumer_capacity = 0.0;
  for (double c : trace.bus_prosumer_capacity) prosumer_capacity += c;
  for (double c : trace.bus_consumer_ref_total) consumer_capacity += c;

  DemandShapeReport report;
  report.prosumer_mean.assign(H, 0.0);
  report.prosumer_std.assign(H, 0.0);
  report.consumer_mean.assign(H, 0.0);
  report.consumer_std.assign(H, 0.0);

  for (int h = 0; h < H; ++h) {
    std::vector<double> pros, cons;
    for (int d = first_day; d < total_days; ++d) {
      const long t = static_cast<long>(d) * H + h;
      double p = 0.0, c = 0.0;
      for (int n = 0; n < trace.n_buses; ++n) {
        p += trace.at(t, n).energy_prosumer;
        c += trace.at(t, n).energy_consumer;
      }
      pros.push_back(p / prosumer_capacity);
      cons.push_back(c / consumer_capacity);
    }
    auto mean_std = [](const std::vector<double>& xs) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      return std::make_pair(mean, std::sqrt(var / static_cast<double>(xs.size())));
    };
    std::tie(report.prosumer_mean[h], report.prosumer_std[h]) = mean_std(pros);
    std::tie(report.consumer_mean[h], report.consumer_std[h]) = mean_std(cons);
  }
  return report;
}

LogLinearFit log_linear_fit(const std::vector<double>& values) {
  LogLinearFit fit;
  std::vector<double> xs, ys;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0) {
      xs.push_back(static_cast<double>(i));
      ys.push_back(std::log(values[i]));
    }
  }
  const size_t n = xs.size();
  if (n < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::vector<double> lmp_series(const SimulationTrace& trace, int bus, long t_begin, long t_end) {
  std::vector<double> out;
  for (long t = t_begin; t < t_end; ++t) out.push_back(trace.at(t, bus).lmp);
  return out;
}

std::vector<double> storage_series(const SimulationTrace& trace, int bus, long t_begin,
                                   long t_end) {
  std::vector<double> out;
  for (long t = t_begin; t < t_end; ++t) out.push_back(trace.at(t, bus).storage_level);
  return out;
}

}  // namespace vppsim
