#include "vppsim/trace.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vppsim {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

}  // namespace

void write_trace(const SimulationTrace& trace, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "trace.csv");
    out << "t,day,hour,bus,lmp,hub_price,demand_bid,belief_h,storage_level,"
           "cost_prosumer,cost_consumer,energy_prosumer,energy_consumer\n";
    for (const auto& r : trace.records) {
      out << r.t << ',' << r.day << ',' << r.hour << ',' << r.bus << ',' << fmt(r.lmp) << ','
          << fmt(r.hub_price) << ',' << fmt(r.demand_bid) << ',' << fmt(r.belief_h) << ','
          << fmt(r.storage_level) << ',' << fmt(r.cost_prosumer) << ',' << fmt(r.cost_consumer)
          << ',' << fmt(r.energy_prosumer) << ',' << fmt(r.energy_consumer) << '\n';
    }
  }

  {
    std::ofstream out(fs::path(dir) / "dispatch.csv");
    out << "t,hub_price";
    const int n_buses = trace.n_buses;
    const int n_gens = trace.dispatch.empty() ? 0 : static_cast<int>(trace.dispatch[0].dispatch.size());
    for (int n = 0; n < n_buses; ++n) out << ",lmp_" << n;
    for (int g = 0; g < n_gens; ++g) out << ",p_" << g;
    out << '\n';
    for (const auto& d : trace.dispatch) {
      out << d.t << ',' << fmt(d.hub_price);
      for (double v : d.lmps) out << ',' << fmt(v);
      for (double v : d.dispatch) out << ',' << fmt(v);
      out << '\n';
    }
  }

  {
    nlohmann::json manifest;
    manifest["scenario_name"] = trace.scenario_name;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016" PRIx64, trace.config_hash);
    manifest["config_hash"] = hash_hex;
    manifest["seed"] = trace.seed;
    manifest["mode"] = trace.mode;
    manifest["baseline"] = trace.baseline;
    manifest["steps_per_day"] = trace.steps_per_day;
    manifest["n_buses"] = trace.n_buses;
    manifest["bus_prosumer_capacity"] = trace.bus_prosumer_capacity;
    manifest["bus_consumer_ref_total"] = trace.bus_consumer_ref_total;
    manifest["aborted"] = trace.aborted;
    manifest["aborted_at"] = trace.aborted_at;
    manifest["abort_reason"] = trace.abort_reason;
    manifest["wall_time_s"] = trace.wall_time_s;
    manifest["version"] = "1.0";
    manifest["trace_file"] = "trace.csv";
    manifest["dispatch_file"] = "dispatch.csv";
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
}

SimulationTrace read_trace(const std::string& dir) {
  namespace fs = std::filesystem;
  SimulationTrace trace;

  {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("missing manifest.json in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(in);
    trace.scenario_name = manifest.at("scenario_name").get<std::string>();
    trace.config_hash = std::stoull(manifest.at("config_hash").get<std::string>(), nullptr, 16);
    trace.seed = manifest.at("seed").get<std::uint64_t>();
    trace.mode = manifest.at("mode").get<std::string>();
    trace.baseline = manifest.at("baseline").get<bool>();
    trace.steps_per_day = manifest.at("steps_per_day").get<int>();
    trace.n_buses = manifest.at("n_buses").get<int>();
    trace.bus_prosumer_capacity = manifest.at("bus_prosumer_capacity").get<std::vector<double>>();
    trace.bus_consumer_ref_total = manifest.at("bus_consumer_ref_total").get<std::vector<double>>();
    trace.aborted = manifest.at("aborted").get<bool>();
    trace.aborted_at = manifest.at("aborted_at").get<long>();
    trace.abort_reason = manifest.at("abort_reason").get<std::string>();
    trace.wall_time_s = manifest.value("wall_time_s", 0.0);
  }

  {
    std::ifstream in(fs::path(dir) / "trace.csv");
    if (!in) throw std::runtime_error("missing trace.csv in " + dir);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      TraceRecord r;
      r.t = std::stol(f.at(0));
      r.day = std::stoi(f.at(1));
      r.hour = std::stoi(f.at(2));
      r.bus = std::stoi(f.at(3));
      r.lmp = std::stod(f.at(4));
      r.hub_price = std::stod(f.at(5));
      r.demand_bid = std::stod(f.at(6));
      r.belief_h = std::stod(f.at(7));
      r.storage_level = std::stod(f.at(8));
      r.cost_prosumer = std::stod(f.at(9));
      r.cost_consumer = std::stod(f.at(10));
      r.energy_prosumer = std::stod(f.at(11));
      r.energy_consumer = std::stod(f.at(12));
      trace.records.push_back(r);
    }
  }

  {
    std::ifstream in(fs::path(dir) / "dispatch.csv");
    if (!in) throw std::runtime_error("missing dispatch.csv in " + dir);
    std::string line;
    std::getline(in, line);
    const auto header = split(line, ',');
    int n_lmps = 0, n_gens = 0;
    for (const auto& h : header) {
      if (h.rfind("lmp_", 0) == 0) ++n_lmps;
      if (h.rfind("p_", 0) == 0) ++n_gens;
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      DispatchRecord d;
      d.t = std::stol(f.at(0));
      d.hub_price = std::stod(f.at(1));
      for (int n = 0; n < n_lmps; ++n) d.lmps.push_back(std::stod(f.at(2 + n)));
      for (int g = 0; g < n_gens; ++g) d.dispatch.push_back(std::stod(f.at(2 + n_lmps + g)));
      trace.dispatch.push_back(std::move(d));
    }
  }

  return trace;
}

}  // namespace vppsim
