#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vppsim {

// One row per (timestep, bus).
struct TraceRecord {
  long t = 0;
  int day = 0;
  int hour = 0;
  int bus = 0;
  double lmp = 0.0;
  double hub_price = 0.0;
  double demand_bid = 0.0;      // MWh bid by the bus (prosumers + consumers)
  double belief_h = 0.0;        // belief for hour(t) used at this step
  double storage_level = 0.0;   // aggregate end-of-step storage fraction
  double cost_prosumer = 0.0;   // $ paid by prosumers this step (negative = revenue)
  double cost_consumer = 0.0;
  double energy_prosumer = 0.0; // MWh bought by prosumers this step
  double energy_consumer = 0.0;
};

// One row per timestep: system dispatch and prices.
struct DispatchRecord {
  long t = 0;
  double hub_price = 0.0;
  std::vector<double> lmps;
  std::vector<double> dispatch;
};

struct SimulationTrace {
  std::string scenario_name;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string mode;
  bool baseline = false;
  int steps_per_day = 0;
  int n_buses = 0;
  std::vector<double> bus_prosumer_capacity;   // MWh per bus
  std::vector<double> bus_consumer_ref_total;  // MWh per bus (M_c * ref capacity)
  std::vector<TraceRecord> records;
  std::vector<DispatchRecord> dispatch;
  bool aborted = false;
  long aborted_at = -1;
  std::string abort_reason;
  double wall_time_s = 0.0;

  long n_steps() const { return static_cast<long>(dispatch.size()); }
  const TraceRecord& at(long t, int bus) const { return records[t * n_buses + bus]; }
};

// Writes trace.csv, dispatch.csv and manifest.json into `dir` (created if
// missing). The trace plus its manifest are self-describing for `analyze`.
void write_trace(const SimulationTrace& trace, const std::string& dir);

SimulationTrace read_trace(const std::string& dir);

}  // namespace vppsim
