#include "vppsim/grids.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vppsim {

int snap_index(const std::vector<double>& grid, double x) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return static_cast<int>(grid.size()) - 1;
  const int hi = static_cast<int>(it - grid.begin());
  const int lo = hi - 1;
  // Ties toward the lower value.
  return (x - grid[lo] <= grid[hi] - x) ? lo : hi;
}

StorageGrid StorageGrid::uniform(int n_points) {
  if (n_points < 2) throw std::invalid_argument("storage grid needs at least 2 points");
  StorageGrid g;
  g.levels.resize(n_points);
  for (int i = 0; i < n_points; ++i)
    g.levels[i] = static_cast<double>(i) / static_cast<double>(n_points - 1);
  return g;
}

ActionGrid ActionGrid::uniform(int n_points) {
  if (n_points < 1 || n_points % 2 == 0)
    throw std::invalid_argument("action grid needs an odd point count to contain 0");
  ActionGrid g;
  g.levels.resize(n_points);
  for (int i = 0; i < n_points; ++i)
    g.levels[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n_points - 1);
  g.levels[(n_points - 1) / 2] = 0.0;
  return g;
}

int ActionGrid::zero_index() const {
  for (size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == 0.0) return static_cast<int>(i);
  throw std::logic_error("action grid does not contain 0");
}

NdGrid NdGrid::build(const std::vector<double>& hourly_mean, const TriangularSpec& noise,
                     int n_points) {
  NdGrid g;
  g.n_points = n_points;
  g.hours = static_cast<int>(hourly_mean.size());
  g.values.resize(g.hours);
  g.probs.resize(g.hours);

  for (int h = 0; h < g.hours; ++h) {
    const double mean = hourly_mean[h];
    auto& vals = g.values[h];
    auto& prob = g.probs[h];
    vals.resize(n_points);
    prob.assign(n_points, 0.0);

    // Mid-quantile representative points of mean * noise.
    for (int i = 0; i < n_points; ++i) {
      const double u = (2.0 * i + 1.0) / (2.0 * n_points);
      vals[i] = mean * noise.quantile(u);
    }
    std::sort(vals.begin(), vals.end());

    if (mean == 0.0 || noise.degenerate()) {
      // Point-mass distribution; snapping sends everything to the first
      // grid value equal to it.
      prob[snap_index(vals, mean * noise.mode)] = 1.0;
      continue;
    }

    // Snapping-cell masses: P(mean * X in Voronoi cell of vals[i]).
    const double sign = mean > 0.0 ? 1.0 : -1.0;
    auto scaled_cdf = [&](double x) {
      // P(mean * X <= x); noise support is positive so the map is monotone.
      return sign > 0.0 ? noise.cdf(x / mean) : 1.0 - noise.cdf(x / mean);
    };
    double prev_cdf = 0.0;
    for (int i = 0; i < n_points; ++i) {
      const double upper = (i + 1 < n_points)
                               ? scaled_cdf(0.5 * (vals[i] + vals[i + 1]))
                               : 1.0;
      prob[i] = std::max(0.0, upper - prev_cdf);
      prev_cdf = upper;
    }
    // Normalize away rounding dust.
    double total = 0.0;
    for (double v : prob) total += v;
    for (double& v : prob) v /= total;
  }
  return g;
}

double per_prosumer_capacity(const PopulationSpec& pop, int k) {
  double weighted = 0.0;
  for (int j = 0; j < pop.k_types(); ++j) weighted += pop.type_theta[j] * pop.type_share[j];
  return pop.type_theta[k] * pop.total_capacity /
         (static_cast<double>(pop.m_prosumers) * weighted);
}

}  // namespace vppsim
