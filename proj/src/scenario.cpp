#include "vppsim/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vppsim/beliefs.hpp"

namespace vppsim {

using nlohmann::json;

namespace {

TriangularSpec parse_noise(const json& arr) {
  TriangularSpec t;
  t.lo = arr.at(0).get<double>();
  t.hi = arr.at(1).get<double>();
  t.mode = arr.at(2).get<double>();
  return t;
}

json noise_to_json(const TriangularSpec& t) { return json::array({t.lo, t.hi, t.mode}); }

void validate(const SimulationConfig& c, std::vector<std::string>& issues) {
  auto flag = [&issues](const std::string& msg) { issues.push_back(msg); };

  if (c.steps_per_day < 1) flag("steps_per_day: must be at least 1");
  if (c.n_days < 1) flag("days: must be at least 1");
  if (!(c.algo.alpha > 0.0)) flag("algorithm.alpha: must be positive");
  if (!(c.algo.gamma >= 0.0 && c.algo.gamma < 1.0)) flag("algorithm.gamma: must be in [0, 1)");
  if (!(c.algo.zeta > 0.0 && c.algo.zeta < 1.0)) flag("algorithm.zeta: must be in (0, 1)");
  if (c.algo.t_train < 0) flag("algorithm.t_train: must be nonnegative");
  if (!(c.algo.initial_storage >= 0.0 && c.algo.initial_storage <= 1.0))
    flag("algorithm.initial_storage: must be in [0, 1]");
  if (!belief_delta_in_band(c.algo.delta) && !c.algo.allow_delta_out_of_band)
    flag("algorithm.delta: outside [0.5, 1]; set allow_delta_out_of_band to override");
  if (c.grids.storage_points < 2) flag("grids.storage_points: must be at least 2");
  if (c.grids.action_points < 3 || c.grids.action_points % 2 == 0)
    flag("grids.action_points: must be odd and at least 3");
  if (c.grids.nd_points < 1) flag("grids.nd_points: must be at least 1");

  for (const auto& v : validate_network(c.network)) flag("network: " + v);

  if (static_cast<int>(c.buses.size()) != c.network.n_buses)
    flag("buses: must have one entry per network bus");

  for (size_t i = 0; i < c.buses.size(); ++i) {
    const auto& b = c.buses[i];
    const std::string key = "buses[" + std::to_string(i) + "].";
    if (b.pop.m_prosumers < 1) flag(key + "prosumers: must be at least 1");
    if (b.pop.m_consumers < 0) flag(key + "consumers: must be nonnegative");
    if (b.pop.type_share.size() != b.pop.type_theta.size())
      flag(key + "type_share/type_theta: length mismatch");
    double share = 0.0;
    for (double s : b.pop.type_share) share += s;
    if (std::abs(share - 1.0) > 1e-9) flag(key + "type_share: entries must sum to 1");
    for (double th : b.pop.type_theta)
      if (!(th > 0.0)) {
        flag(key + "type_theta: entries must be positive");
        break;
      }
    if (!(b.pop.total_capacity > 0.0)) flag(key + "total_capacity: must be positive");
    if (!(b.pop.efficiency > 0.0 && b.pop.efficiency <= 1.0))
      flag(key + "efficiency: must be in (0, 1]");
    if (b.pop.consumer_ref_capacity < 0.0)
      flag(key + "consumer_ref_capacity: must be nonnegative");

    auto check_profile = [&](const std::vector<double>& p, const char* name) {
      if (static_cast<int>(p.size()) != c.steps_per_day)
        flag(key + name + ": length must equal steps_per_day");
      for (double v : p)
        if (!std::isfinite(v)) {
          flag(key + name + ": entries must be finite");
          break;
        }
    };
    check_profile(b.profiles.prosumer_nd_mean, "prosumer_profile");
    check_profile(b.profiles.consumer_nd_mean, "consumer_profile");

    auto check_noise = [&](const TriangularSpec& t, const char* name) {
      if (!(t.lo <= t.mode && t.mode <= t.hi)) flag(key + name + ": requires lo <= mode <= hi");
      if (t.lo < 0.0) flag(key + name + ": multiplicative noise must be nonnegative");
    };
    check_noise(b.profiles.prosumer_noise, "prosumer_noise");
    check_noise(b.profiles.consumer_noise, "consumer_noise");

    // Prosumer net-load ratios must stay inside [-1, 1] after scaling.
    double worst = 0.0;
    for (double v : b.profiles.prosumer_nd_mean)
      worst = std::max(worst, std::abs(v) * b.profiles.prosumer_noise.hi);
    if (worst > 1.0)
      flag(key + "prosumer_profile: scaled net load exceeds the [-1, 1] ratio range");
  }

  for (size_t r = 0; r < c.renewables.size(); ++r) {
    const auto& rs = c.renewables[r];
    const std::string key = "network.generators[renewable " + std::to_string(r) + "].";
    if (rs.gen < 0 || rs.gen >= c.network.n_gens()) flag(key + "gen: index out of range");
    if (!(rs.nameplate > 0.0)) flag(key + "nameplate: must be positive");
    if (static_cast<int>(rs.cf_mean.size()) != c.steps_per_day)
      flag(key + "cf_profile: length must equal steps_per_day");
    for (double v : rs.cf_mean)
      if (!(v >= 0.0) || !std::isfinite(v)) {
        flag(key + "cf_profile: entries must be nonnegative and finite");
        break;
      }
    if (!(rs.noise.lo <= rs.noise.mode && rs.noise.mode <= rs.noise.hi) || rs.noise.lo < 0.0)
      flag(key + "cf_noise: requires 0 <= lo <= mode <= hi");
  }
}

}  // namespace

SimulationConfig parse_scenario_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ScenarioError({e.what()}, std::string("JSON parse error: ") + e.what());
  }

  SimulationConfig c;
  double unit_scale = 1.0;
  try {
    c.name = doc.at("name").get<std::string>();
    const std::string units = doc.value("units", "MWh");
    if (units == "kWh") {
      unit_scale = 1e-3;
    } else if (units != "MWh") {
      throw ScenarioError({"units: must be \"MWh\" or \"kWh\""}, "invalid units");
    }
    c.steps_per_day = doc.at("steps_per_day").get<int>();
    c.n_days = doc.at("days").get<int>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    const std::string mode = doc.at("mode").get<std::string>();
    if (mode == "finite_agent") {
      c.mode = SimMode::FiniteAgent;
    } else if (mode == "limit_mean_field") {
      c.mode = SimMode::LimitMeanField;
    } else {
      throw ScenarioError({"mode: must be \"finite_agent\" or \"limit_mean_field\""},
                          "invalid mode");
    }

    const json& alg = doc.at("algorithm");
    c.algo.alpha = alg.at("alpha").get<double>();
    c.algo.gamma = alg.at("gamma").get<double>();
    c.algo.zeta = alg.at("zeta").get<double>();
    c.algo.delta = alg.at("delta").get<double>();
    c.algo.t_train = alg.at("t_train").get<long>();
    c.algo.persist_q = alg.value("persist_q", true);
    c.algo.initial_storage = alg.value("initial_storage", 0.5);
    if (alg.contains("flat_belief")) c.algo.flat_belief = alg.at("flat_belief").get<double>();
    const std::string conv = alg.value("kernel_action", "incoming");
    if (conv == "incoming") {
      c.algo.kernel_action = KernelAction::Incoming;
    } else if (conv == "outgoing") {
      c.algo.kernel_action = KernelAction::Outgoing;
    } else {
      throw ScenarioError({"algorithm.kernel_action: must be \"incoming\" or \"outgoing\""},
                          "invalid kernel_action");
    }
    c.algo.vi_tol = alg.value("vi_tol", 1e-9);
    c.algo.allow_delta_out_of_band = alg.value("allow_delta_out_of_band", false);

    const json& grids = doc.at("grids");
    c.grids.storage_points = grids.at("storage_points").get<int>();
    c.grids.action_points = grids.at("action_points").get<int>();
    c.grids.nd_points = grids.at("nd_points").get<int>();

    const json& net = doc.at("network");
    c.network.n_buses = net.at("buses").get<int>();
    c.network.gens_by_bus.assign(std::max(0, c.network.n_buses), {});
    for (const json& jl : net.value("lines", json::array())) {
      LineSpec line;
      line.id = c.network.n_lines();
      line.ptdf = jl.at("ptdf").get<std::vector<double>>();
      line.f_max = jl.at("f_max").get<double>();
      c.network.lines.push_back(std::move(line));
    }
    for (const json& jg : net.at("generators")) {
      GeneratorSpec gen;
      gen.id = c.network.n_gens();
      gen.bus = jg.at("bus").get<int>();
      if (jg.contains("renewable")) {
        const json& jr = jg.at("renewable");
        RenewableSpec rs;
        rs.gen = gen.id;
        rs.nameplate = jr.at("nameplate").get<double>();
        rs.cf_mean = jr.at("cf_profile").get<std::vector<double>>();
        rs.noise = parse_noise(jr.at("cf_noise"));
        gen.cost_a = 1e-6;
        gen.cost_b = 0.0;
        gen.p_max = rs.nameplate;
        c.renewables.push_back(std::move(rs));
      } else {
        gen.cost_a = jg.at("cost_a").get<double>();
        gen.cost_b = jg.at("cost_b").get<double>();
        gen.p_max = jg.at("p_max").get<double>();
      }
      if (gen.bus >= 0 && gen.bus < c.network.n_buses)
        c.network.gens_by_bus[gen.bus].push_back(gen.id);
      c.network.generators.push_back(std::move(gen));
    }

    for (const json& jb : doc.at("buses")) {
      BusSetup b;
      b.pop.m_prosumers = jb.at("prosumers").get<int>();
      b.pop.m_consumers = jb.at("consumers").get<int>();
      b.pop.type_share = jb.at("type_share").get<std::vector<double>>();
      b.pop.type_theta = jb.at("type_theta").get<std::vector<double>>();
      b.pop.total_capacity = unit_scale * jb.at("total_capacity").get<double>();
      b.pop.efficiency = jb.at("efficiency").get<double>();
      b.pop.consumer_ref_capacity = unit_scale * jb.at("consumer_ref_capacity").get<double>();
      b.profiles.prosumer_nd_mean = jb.at("prosumer_profile").get<std::vector<double>>();
      b.profiles.consumer_nd_mean = jb.at("consumer_profile").get<std::vector<double>>();
      b.profiles.prosumer_noise = parse_noise(jb.at("prosumer_noise"));
      b.profiles.consumer_noise = parse_noise(jb.at("consumer_noise"));
      c.buses.push_back(std::move(b));
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const json::exception& e) {
    throw ScenarioError({e.what()}, std::string("scenario structure error: ") + e.what());
  }

  std::vector<std::string> issues;
  validate(c, issues);
  if (!issues.empty()) {
    std::ostringstream what;
    what << "scenario validation failed (" << issues.size() << " issue(s)); first: " << issues[0];
    throw ScenarioError(issues, what.str());
  }
  return c;
}

SimulationConfig load_scenario(const std::string& source) {
  if (std::filesystem::exists(source)) {
    std::ifstream in(source);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_json(buf.str());
  }
  for (const auto& name : bundled_scenario_names()) {
    if (name == source) return parse_scenario_json(bundled_scenario_text(name));
  }
  throw ScenarioError({"scenario not found: " + source},
                      "no such file or bundled scenario: " + source);
}

std::string scenario_to_json(const SimulationConfig& c) {
  json doc;
  doc["name"] = c.name;
  doc["units"] = "MWh";
  doc["steps_per_day"] = c.steps_per_day;
  doc["days"] = c.n_days;
  doc["seed"] = c.seed;
  doc["mode"] = c.mode == SimMode::FiniteAgent ? "finite_agent" : "limit_mean_field";

  json alg;
  alg["alpha"] = c.algo.alpha;
  alg["gamma"] = c.algo.gamma;
  alg["zeta"] = c.algo.zeta;
  alg["delta"] = c.algo.delta;
  alg["t_train"] = c.algo.t_train;
  alg["persist_q"] = c.algo.persist_q;
  alg["initial_storage"] = c.algo.initial_storage;
  if (c.algo.flat_belief) alg["flat_belief"] = *c.algo.flat_belief;
  alg["kernel_action"] = c.algo.kernel_action == KernelAction::Incoming ? "incoming" : "outgoing";
  alg["vi_tol"] = c.algo.vi_tol;
  alg["allow_delta_out_of_band"] = c.algo.allow_delta_out_of_band;
  doc["algorithm"] = alg;

  doc["grids"] = {{"storage_points", c.grids.storage_points},
                  {"action_points", c.grids.action_points},
                  {"nd_points", c.grids.nd_points}};

  json net;
  net["buses"] = c.network.n_buses;
  net["lines"] = json::array();
  for (const auto& l : c.network.lines)
    net["lines"].push_back({{"ptdf", l.ptdf}, {"f_max", l.f_max}});
  net["generators"] = json::array();
  for (const auto& g : c.network.generators) {
    json jg;
    jg["bus"] = g.bus;
    const RenewableSpec* rs = nullptr;
    for (const auto& r : c.renewables)
      if (r.gen == g.id) rs = &r;
    if (rs) {
      jg["renewable"] = {{"nameplate", rs->nameplate},
                         {"cf_profile", rs->cf_mean},
                         {"cf_noise", noise_to_json(rs->noise)}};
    } else {
      jg["cost_a"] = g.cost_a;
      jg["cost_b"] = g.cost_b;
      jg["p_max"] = g.p_max;
    }
    net["generators"].push_back(jg);
  }
  doc["network"] = net;

  doc["buses"] = json::array();
  for (const auto& b : c.buses) {
    json jb;
    jb["prosumers"] = b.pop.m_prosumers;
    jb["consumers"] = b.pop.m_consumers;
    jb["type_share"] = b.pop.type_share;
    jb["type_theta"] = b.pop.type_theta;
    jb["total_capacity"] = b.pop.total_capacity;
    jb["efficiency"] = b.pop.efficiency;
    jb["consumer_ref_capacity"] = b.pop.consumer_ref_capacity;
    jb["prosumer_profile"] = b.profiles.prosumer_nd_mean;
    jb["consumer_profile"] = b.profiles.consumer_nd_mean;
    jb["prosumer_noise"] = noise_to_json(b.profiles.prosumer_noise);
    jb["consumer_noise"] = noise_to_json(b.profiles.consumer_noise);
    doc["buses"].push_back(jb);
  }
  return doc.dump(2);
}

std::uint64_t config_hash(const SimulationConfig& config) {
  const std::string text = scenario_to_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace vppsim
