#include "vppsim/mdp.hpp"

#include <cmath>
#include <stdexcept>

namespace vppsim {

MdpGrids MdpGrids::build(const GridSpec& spec, const std::vector<double>& prosumer_nd_mean,
                         const TriangularSpec& noise) {
  MdpGrids g;
  g.storage = StorageGrid::uniform(spec.storage_points);
  g.actions = ActionGrid::uniform(spec.action_points);
  g.nd = NdGrid::build(prosumer_nd_mean, noise, spec.nd_points);
  g.hours = static_cast<int>(prosumer_nd_mean.size());
  return g;
}

TransitionModel build_transition_model(const MdpGrids& grids, double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must be in [0, 1]");
  TransitionModel m;
  m.grids = grids;
  m.zeta = zeta;
  const int E = grids.storage.size();
  const int A = grids.n_actions();
  m.e_next.resize(E * A);
  m.feasible.resize(E * A);
  for (int e = 0; e < E; ++e) {
    const double level = grids.storage.levels[e];
    const auto mask = action_mask(level, grids.actions);
    for (int a = 0; a < A; ++a) {
      m.e_next[e * A + a] = grids.storage.snap(storage_transition(level, grids.actions.levels[a]));
      m.feasible[e * A + a] = mask[a];
    }
  }
  return m;
}

double TransitionModel::prob(int s_next, int s, int a) const {
  const int h = grids.hour_of(s);
  const int h_next = grids.hour_of(s_next);
  if (h_next != (h + 1) % grids.hours) return 0.0;
  const int E = grids.storage.size();
  const double p_nd = grids.nd.probs[h_next][grids.nd_index(s_next)];
  double p_e = zeta / static_cast<double>(E);
  if (grids.e_index(s_next) == e_next[grids.e_index(s) * n_actions() + a]) p_e += 1.0 - zeta;
  return p_nd * p_e;
}

void TransitionModel::row(int s, int a, std::span<double> out) const {
  for (double& v : out) v = 0.0;
  const int h_next = (grids.hour_of(s) + 1) % grids.hours;
  const int E = grids.storage.size();
  const int target = e_next[grids.e_index(s) * n_actions() + a];
  const double uniform = zeta / static_cast<double>(E);
  for (int e = 0; e < E; ++e) {
    const double p_e = uniform + (e == target ? 1.0 - zeta : 0.0);
    for (int nd = 0; nd < grids.nd.n_points; ++nd)
      out[grids.state_index(e, nd, h_next)] = p_e * grids.nd.probs[h_next][nd];
  }
}

int TransitionModel::sample_next(int s, int a, KeyedRng& rng) const {
  const int h_next = (grids.hour_of(s) + 1) % grids.hours;
  const int E = grids.storage.size();
  int e_idx;
  if (rng.uniform() < zeta) {
    e_idx = rng.uniform_int(E);
  } else {
    e_idx = e_next[grids.e_index(s) * n_actions() + a];
  }
  // Inverse-CDF draw over the hour's net-load points.
  const double u = rng.uniform();
  double acc = 0.0;
  int nd_idx = grids.nd.n_points - 1;
  for (int i = 0; i < grids.nd.n_points; ++i) {
    acc += grids.nd.probs[h_next][i];
    if (u < acc) {
      nd_idx = i;
      break;
    }
  }
  return grids.state_index(e_idx, nd_idx, h_next);
}

TransitionModel::SweepCache TransitionModel::make_sweep_cache(
    const std::vector<double>& value) const {
  const int E = grids.storage.size();
  const int ND = grids.nd.n_points;
  const int H = grids.hours;
  SweepCache cache;
  cache.b.assign(H * E, 0.0);
  cache.b_mean.assign(H, 0.0);
  for (int h = 0; h < H; ++h) {
    for (int e = 0; e < E; ++e) {
      double acc = 0.0;
      for (int nd = 0; nd < ND; ++nd)
        acc += grids.nd.probs[h][nd] * value[grids.state_index(e, nd, h)];
      cache.b[h * E + e] = acc;
      cache.b_mean[h] += acc;
    }
    cache.b_mean[h] /= static_cast<double>(E);
  }
  return cache;
}

double TransitionModel::expected_next(int s, int a, const SweepCache& cache) const {
  const int h_next = (grids.hour_of(s) + 1) % grids.hours;
  const int E = grids.storage.size();
  const int target = e_next[grids.e_index(s) * n_actions() + a];
  return (1.0 - zeta) * cache.b[h_next * E + target] + zeta * cache.b_mean[h_next];
}

Policy Policy::deterministic(const TransitionModel& model, int action_idx) {
  Policy p;
  p.n_states = model.n_states();
  p.n_actions = model.n_actions();
  p.probs.assign(static_cast<size_t>(p.n_states) * p.n_actions, 0.0);
  const int zero = model.grids.actions.zero_index();
  for (int s = 0; s < p.n_states; ++s)
    p.at(s, model.masked(s, action_idx) ? zero : action_idx) = 1.0;
  return p;
}

double Policy::max_row_l1_distance(const Policy& other) const {
  double worst = 0.0;
  for (int s = 0; s < n_states; ++s) {
    double d = 0.0;
    for (int a = 0; a < n_actions; ++a) d += std::abs(at(s, a) - other.at(s, a));
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace vppsim
