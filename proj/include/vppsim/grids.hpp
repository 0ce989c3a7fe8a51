#pragma once

#include <vector>

#include "vppsim/rng.hpp"

namespace vppsim {

// Global step index with intra-day structure: hour(t) = t mod H.
struct TimeIndex {
  long t = 0;
  int steps_per_day = 24;

  int hour() const { return static_cast<int>(t % steps_per_day); }
  long day() const { return t / steps_per_day; }
};

// Snap x to the nearest grid value; exact midpoints resolve to the lower one.
int snap_index(const std::vector<double>& grid, double x);

// Uniform storage grid over [0, 1].
struct StorageGrid {
  std::vector<double> levels;

  static StorageGrid uniform(int n_points);
  int size() const { return static_cast<int>(levels.size()); }
  int snap(double e) const { return snap_index(levels, e); }
};

// Charge/discharge fractions in [-1, 1]; must contain 0.
struct ActionGrid {
  std::vector<double> levels;

  static ActionGrid uniform(int n_points);  // evenly spaced over [-1, 1]
  int size() const { return static_cast<int>(levels.size()); }
  int zero_index() const;
};

// Per-hour net-load grid: quantile-representative points of the scaled
// triangular distribution, with snapping-cell probabilities.
struct NdGrid {
  int n_points = 0;
  int hours = 0;
  std::vector<std::vector<double>> values;  // [hour][point], ascending
  std::vector<std::vector<double>> probs;   // [hour][point], sums to 1

  static NdGrid build(const std::vector<double>& hourly_mean, const TriangularSpec& noise,
                      int n_points);
  double value(int hour, int idx) const { return values[hour][idx]; }
  int snap(int hour, double nd) const { return snap_index(values[hour], nd); }
};

struct GridSpec {
  int storage_points = 21;
  int action_points = 9;
  int nd_points = 5;
};

// Prosumer/consumer population at one bus. Prosumer heterogeneity enters
// only through per-type capacity weights.
struct PopulationSpec {
  int m_prosumers = 0;
  int m_consumers = 0;
  std::vector<double> type_share;       // b_k, sums to 1
  std::vector<double> type_theta;       // theta_k > 0
  double total_capacity = 0.0;          // MWh, cap over all prosumer storage
  double efficiency = 1.0;              // eta in (0, 1]
  double consumer_ref_capacity = 0.0;   // MWh, notional capacity per consumer

  int k_types() const { return static_cast<int>(type_share.size()); }
};

// Storage capacity of one type-k prosumer:
//   theta_k * total / (M_p * sum_k theta_k b_k).
double per_prosumer_capacity(const PopulationSpec& pop, int k);

// Exogenous hourly shapes and their multiplicative noise.
struct ScenarioProfiles {
  std::vector<double> prosumer_nd_mean;  // length H, ratio to capacity
  std::vector<double> consumer_nd_mean;  // length H, ratio to ref capacity
  TriangularSpec prosumer_noise;
  TriangularSpec consumer_noise;
};

}  // namespace vppsim
