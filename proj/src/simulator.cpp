#include "vppsim/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vppsim/dispatch.hpp"

namespace vppsim {

namespace {

// Largest-remainder apportionment of prosumers to types.
std::vector<int> type_counts(const PopulationSpec& pop) {
  const int K = pop.k_types();
  std::vector<int> counts(K, 0);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int k = 0; k < K; ++k) {
    const double exact = pop.type_share[k] * pop.m_prosumers;
    counts[k] = static_cast<int>(std::floor(exact));
    assigned += counts[k];
    remainders.push_back({exact - counts[k], k});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < pop.m_prosumers - assigned; ++i) ++counts[remainders[i % K].second];
  return counts;
}

double expected_prosumer_demand(const BusSetup& bus, int hour) {
  return bus.pop.total_capacity * bus.profiles.prosumer_nd_mean[hour] *
         bus.profiles.prosumer_noise.mean();
}

Network expected_network(const SimulationConfig& config, int hour) {
  Network net = config.network;
  for (const auto& rs : config.renewables)
    net.generators[rs.gen].p_max =
        std::max(0.0, rs.nameplate * rs.cf_mean[hour] * rs.noise.mean());
  return net;
}

// ED warm start: per hour, clear the market with zero storage actions and
// expected loads; the resulting LMPs seed the beliefs.
std::vector<BeliefVector> initial_beliefs_from_ed(const SimulationConfig& config) {
  const int H = config.steps_per_day;
  const int N = config.network.n_buses;
  std::vector<BeliefVector> beliefs(N);
  for (int n = 0; n < N; ++n) {
    beliefs[n].values.assign(H, 0.0);
    beliefs[n].delta = config.algo.delta;
  }
  for (int h = 0; h < H; ++h) {
    DemandVector demand;
    demand.d.resize(N);
    for (int n = 0; n < N; ++n) {
      demand.d[n] = expected_prosumer_demand(config.buses[n], h) +
                    config.buses[n].pop.consumer_ref_capacity *
                        expected_consumer_ratio_sum(config.buses[n], h);
    }
    const EDSolution sol = solve_ed(expected_network(config, h), demand);
    for (int n = 0; n < N; ++n) beliefs[n].values[h] = sol.lmps[n];
  }
  return beliefs;
}

int snap_level_index(const TransitionModel& model, double level) {
  return model.grids.storage.snap(level);
}

int sample_nd_index(const TransitionModel& model, int hour, KeyedRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const int nd_count = model.grids.nd.n_points;
  for (int i = 0; i < nd_count; ++i) {
    acc += model.grids.nd.probs[hour][i];
    if (u < acc) return i;
  }
  return nd_count - 1;
}

int sample_from_row(const Policy& policy, int s, KeyedRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int a = 0; a < policy.n_actions; ++a) {
    acc += policy.at(s, a);
    if (u < acc) return a;
  }
  return policy.n_actions - 1;
}

double mf_expected_storage(const MeanField& mf, const TransitionModel& model) {
  double level = 0.0;
  for (int s = 0; s < mf.n_states; ++s) {
    const double e = model.grids.storage.levels[model.grids.e_index(s)];
    for (int a = 0; a < mf.n_actions; ++a) level += mf.at(s, a) * e;
  }
  return level;
}

}  // namespace

double expected_consumer_ratio_sum(const BusSetup& bus, int hour) {
  return bus.pop.m_consumers * bus.profiles.consumer_nd_mean[hour] *
         bus.profiles.consumer_noise.mean();
}

SimulatorState init_simulation(const SimulationConfig& config) {
  SimulatorState state;
  state.config = config;

  std::vector<BeliefVector> beliefs;
  if (config.algo.flat_belief) {
    beliefs.assign(config.network.n_buses, BeliefVector{});
    for (auto& b : beliefs) {
      b.values.assign(config.steps_per_day, *config.algo.flat_belief);
      b.delta = config.algo.delta;
    }
  } else {
    beliefs = initial_beliefs_from_ed(config);
  }

  state.buses.resize(config.network.n_buses);
  for (int n = 0; n < config.network.n_buses; ++n) {
    BusRuntime& bus = state.buses[n];
    const BusSetup& setup = config.buses[n];
    bus.pop = setup.pop;
    bus.profiles = setup.profiles;
    bus.model = build_transition_model(
        MdpGrids::build(config.grids, setup.profiles.prosumer_nd_mean,
                        setup.profiles.prosumer_noise),
        config.algo.zeta);
    bus.belief = beliefs[n];

    const auto counts = type_counts(setup.pop);
    for (int k = 0; k < setup.pop.k_types(); ++k) {
      const double cap = per_prosumer_capacity(setup.pop, k);
      for (int i = 0; i < counts[k]; ++i) bus.prosumer_capacity.push_back(cap);
    }

    const double e0 =
        bus.model.grids.storage.levels[snap_level_index(bus.model, config.algo.initial_storage)];
    bus.prosumer_level.assign(bus.prosumer_capacity.size(), e0);
    bus.aggregate_level = e0;
    bus.mf = MeanField::uniform(bus.model.n_states(), bus.model.n_actions());
    bus.q = SoftQTable::zeros(bus.model, config.algo.gamma);
  }
  return state;
}

std::vector<Policy> run_training_phase(SimulatorState& state, long t) {
  const SimulationConfig& config = state.config;
  const int N = static_cast<int>(state.buses.size());
  const int hour = static_cast<int>(t % config.steps_per_day);
  const RegularizerSpec reg{config.algo.alpha};
  std::vector<Policy> policies(N);

  if (config.baseline) {
    for (int n = 0; n < N; ++n)
      policies[n] = Policy::deterministic(state.buses[n].model,
                                          state.buses[n].model.grids.actions.zero_index());
    return policies;
  }

#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n < N; ++n) {
    BusRuntime& bus = state.buses[n];
    const BusMdp mdp(bus.model, bus.belief.values, bus.pop.total_capacity, bus.pop.efficiency);
    if (config.mode == SimMode::LimitMeanField) {
      bus.q = soft_value_iteration(mdp, reg, config.algo.gamma, config.algo.vi_tol,
                                   bus.q_initialized ? &bus.q : nullptr);
      bus.q_initialized = true;
    } else if (config.algo.t_train > 0) {
      KeyedRng rng(config.seed, Draw::Train, t, n);
      const int e_idx = snap_level_index(bus.model, bus.aggregate_level);
      const int nd_idx = sample_nd_index(bus.model, hour, rng);
      const int s0 = bus.model.grids.state_index(e_idx, nd_idx, hour);
      const SoftQTable* warm = (config.algo.persist_q && bus.q_initialized) ? &bus.q : nullptr;
      bus.q = soft_q_learning(mdp, reg, config.algo.gamma, config.algo.t_train,
                              default_lr_schedule(), rng, s0, warm);
      bus.q_initialized = true;
    }
    policies[n] = policy_from_q(bus.q, reg);
  }
  return policies;
}

ExecutionResult run_execution_phase(SimulatorState& state, const std::vector<Policy>& policies,
                                    long t) {
  const SimulationConfig& config = state.config;
  const int N = static_cast<int>(state.buses.size());
  const int hour = static_cast<int>(t % config.steps_per_day);

  ExecutionResult result;
  result.buses.resize(N);
  result.demand.d.assign(N, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n < N; ++n) {
    BusRuntime& bus = state.buses[n];
    BusExecution& out = result.buses[n];
    const MdpGrids& grids = bus.model.grids;
    const int A = bus.model.n_actions();
    const int E = grids.storage.size();
    out.agents.resize(bus.prosumer_capacity.size());

    for (size_t i = 0; i < bus.prosumer_capacity.size(); ++i) {
      AgentStep& step = out.agents[i];
      step.pre_level = bus.prosumer_level[i];

      KeyedRng rng_nd(config.seed, Draw::ProsumerNd, t, n, static_cast<long>(i));
      const int nd_idx = sample_net_load(grids.nd, bus.profiles.prosumer_nd_mean,
                                         bus.profiles.prosumer_noise, hour, rng_nd);
      step.nd_value = grids.nd.value(hour, nd_idx);

      const int e_idx = grids.storage.snap(step.pre_level);
      const int s = grids.state_index(e_idx, nd_idx, hour);
      KeyedRng rng_a(config.seed, Draw::Action, t, n, static_cast<long>(i));
      const int a_idx = sample_from_row(policies[n], s, rng_a);
      step.action = grids.actions.levels[a_idx];
      step.grid_flow = efficiency_adjust(step.pre_level, step.action, bus.pop.efficiency) *
                       bus.prosumer_capacity[i];

      out.prosumer_energy += step.grid_flow + step.nd_value * bus.prosumer_capacity[i];

      KeyedRng rng_regen(config.seed, Draw::Regen, t, n, static_cast<long>(i));
      if (rng_regen.uniform() < config.algo.zeta) {
        KeyedRng rng_level(config.seed, Draw::RegenLevel, t, n, static_cast<long>(i));
        step.regenerated = true;
        step.post_level = grids.storage.levels[rng_level.uniform_int(E)];
      } else {
        step.post_level = grids.storage.levels[bus.model.e_next[e_idx * A + a_idx]];
      }
      bus.prosumer_level[i] = step.post_level;
    }

    for (int j = 0; j < bus.pop.m_consumers; ++j) {
      KeyedRng rng_c(config.seed, Draw::ConsumerNd, t, n, j);
      const double ratio =
          bus.profiles.consumer_nd_mean[hour] * bus.profiles.consumer_noise.sample(rng_c);
      out.consumer_energy += ratio * bus.pop.consumer_ref_capacity;
    }

    out.demand = out.prosumer_energy + out.consumer_energy;
    out.aggregate_level = aggregate_storage(bus.prosumer_level, bus.prosumer_capacity);
    bus.aggregate_level = out.aggregate_level;
    result.demand.d[n] = out.demand;
  }
  return result;
}

Network realize_network(const SimulatorState& state, long t) {
  const SimulationConfig& config = state.config;
  const int hour = static_cast<int>(t % config.steps_per_day);
  Network net = config.network;
  for (const auto& rs : config.renewables) {
    double factor;
    if (config.mode == SimMode::LimitMeanField) {
      factor = rs.noise.mean();
    } else {
      KeyedRng rng(config.seed, Draw::RenewableCf, t, rs.gen);
      factor = rs.noise.sample(rng);
    }
    net.generators[rs.gen].p_max = std::max(0.0, rs.nameplate * rs.cf_mean[hour] * factor);
  }
  return net;
}

SimulationTrace run_simulation(const SimulationConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  SimulatorState state = init_simulation(config);

  SimulationTrace trace;
  trace.scenario_name = config.name;
  trace.config_hash = config_hash(config);
  trace.seed = config.seed;
  trace.mode = config.mode == SimMode::FiniteAgent ? "finite_agent" : "limit_mean_field";
  trace.baseline = config.baseline;
  trace.steps_per_day = config.steps_per_day;
  trace.n_buses = config.network.n_buses;
  for (const auto& b : config.buses) {
    trace.bus_prosumer_capacity.push_back(b.pop.total_capacity);
    trace.bus_consumer_ref_total.push_back(b.pop.m_consumers * b.pop.consumer_ref_capacity);
  }

  const long total_steps = static_cast<long>(config.n_days) * config.steps_per_day;
  for (long t = 0; t < total_steps; ++t) {
    const int hour = static_cast<int>(t % config.steps_per_day);
    const int day = static_cast<int>(t / config.steps_per_day);

    const std::vector<Policy> policies = run_training_phase(state, t);

    DemandVector demand;
    std::vector<double> prosumer_energy(trace.n_buses, 0.0);
    std::vector<double> consumer_energy(trace.n_buses, 0.0);
    std::vector<double> storage_level(trace.n_buses, 0.0);

    if (config.mode == SimMode::LimitMeanField) {
      demand.d.assign(trace.n_buses, 0.0);
      for (int n = 0; n < trace.n_buses; ++n) {
        BusRuntime& bus = state.buses[n];
        bus.mf = consistency_update(bus.mf, policies[n], bus.model, config.algo.zeta,
                                    config.algo.kernel_action);
        const double consumers = expected_consumer_ratio_sum(config.buses[n], hour) *
                                 bus.pop.consumer_ref_capacity;
        demand.d[n] = meanfield_to_demand(bus.mf, bus.model, bus.pop, 0.0) + consumers;
        prosumer_energy[n] = demand.d[n] - consumers;
        consumer_energy[n] = consumers;
        storage_level[n] = mf_expected_storage(bus.mf, bus.model);
        bus.aggregate_level = storage_level[n];
      }
    } else {
      const ExecutionResult exec = run_execution_phase(state, policies, t);
      demand = exec.demand;
      for (int n = 0; n < trace.n_buses; ++n) {
        prosumer_energy[n] = exec.buses[n].prosumer_energy;
        consumer_energy[n] = exec.buses[n].consumer_energy;
        storage_level[n] = exec.buses[n].aggregate_level;
      }
    }

    EDSolution sol;
    try {
      sol = solve_ed(realize_network(state, t), demand);
    } catch (const InfeasibleError& e) {
      trace.aborted = true;
      trace.aborted_at = t;
      trace.abort_reason = e.what();
      break;
    }

    DispatchRecord drec;
    drec.t = t;
    drec.hub_price = sol.hub_price;
    drec.lmps = sol.lmps;
    drec.dispatch = sol.dispatch;
    trace.dispatch.push_back(std::move(drec));

    for (int n = 0; n < trace.n_buses; ++n) {
      BusRuntime& bus = state.buses[n];
      TraceRecord rec;
      rec.t = t;
      rec.day = day;
      rec.hour = hour;
      rec.bus = n;
      rec.lmp = sol.lmps[n];
      rec.hub_price = sol.hub_price;
      rec.demand_bid = demand.d[n];
      rec.belief_h = bus.belief.values[hour];
      rec.storage_level = storage_level[n];
      rec.energy_prosumer = prosumer_energy[n];
      rec.energy_consumer = consumer_energy[n];
      rec.cost_prosumer = sol.lmps[n] * prosumer_energy[n];
      rec.cost_consumer = sol.lmps[n] * consumer_energy[n];
      trace.records.push_back(rec);

      bus.belief = update_belief(bus.belief, TimeIndex{t, config.steps_per_day}, sol.lmps[n]);
    }
  }

  trace.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

MfeResult run_mfe_iteration(
    const SimulationConfig& config, double tol, int max_days,
    const std::optional<std::vector<std::vector<double>>>& initial_beliefs,
    bool throw_on_max_days) {
  if (config.mode != SimMode::LimitMeanField)
    throw std::invalid_argument("run_mfe_iteration requires limit_mean_field mode");

  SimulatorState state = init_simulation(config);
  const int N = static_cast<int>(state.buses.size());
  const int H = config.steps_per_day;
  if (initial_beliefs) {
    for (int n = 0; n < N; ++n) state.buses[n].belief.values = (*initial_beliefs)[n];
  }

  MfeResult result;
  std::vector<Policy> policies;
  for (int day = 0; day < max_days; ++day) {
    policies = run_training_phase(state, static_cast<long>(day) * H);

    std::vector<std::vector<double>> realized(N, std::vector<double>(H, 0.0));
    for (int h = 0; h < H; ++h) {
      const long t = static_cast<long>(day) * H + h;
      DemandVector demand;
      demand.d.assign(N, 0.0);
      for (int n = 0; n < N; ++n) {
        BusRuntime& bus = state.buses[n];
        bus.mf = consistency_update(bus.mf, policies[n], bus.model, config.algo.zeta,
                                    config.algo.kernel_action);
        demand.d[n] = meanfield_to_demand(bus.mf, bus.model, bus.pop,
                                          expected_consumer_ratio_sum(config.buses[n], h));
      }
      const EDSolution sol = solve_ed(realize_network(state, t), demand);
      for (int n = 0; n < N; ++n) realized[n][h] = sol.lmps[n];
    }

    double dist = 0.0;
    for (int n = 0; n < N; ++n)
      for (int h = 0; h < H; ++h)
        dist += std::abs(realized[n][h] - state.buses[n].belief.values[h]);
    result.day_distances.push_back(dist);
    result.days_run = day + 1;

    for (int n = 0; n < N; ++n) state.buses[n].belief.values = realized[n];

    if (dist <= tol) {
      result.converged = true;
      break;
    }
  }

  for (int n = 0; n < N; ++n) {
    result.terminal_beliefs.push_back(state.buses[n].belief.values);
    result.terminal_mf.push_back(state.buses[n].mf);
  }
  // Policies consistent with the terminal beliefs.
  result.terminal_policies = run_training_phase(state, static_cast<long>(result.days_run) * H);

  if (!result.converged && throw_on_max_days)
    throw MaxDaysExceeded(result.day_distances, "MFE iteration hit the day cap");
  return result;
}

}  // namespace vppsim
