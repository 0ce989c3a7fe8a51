#include "vppsim/network.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace vppsim {

std::vector<std::string> validate_network(const Network& net) {
  std::vector<std::string> violations;
  auto add = [&violations](const std::string& msg) { violations.push_back(msg); };

  if (net.n_buses <= 0) add("network has no buses");

  for (const auto& g : net.generators) {
    std::ostringstream who;
    who << "generator " << g.id;
    if (g.bus < 0 || g.bus >= net.n_buses) add(who.str() + ": bus index out of range");
    if (!(g.cost_a > 0.0)) add(who.str() + ": non-positive quadratic cost coefficient");
    if (g.p_max < 0.0 || !std::isfinite(g.p_max)) add(who.str() + ": negative or non-finite capacity");
    if (!std::isfinite(g.cost_a) || !std::isfinite(g.cost_b)) add(who.str() + ": non-finite cost coefficient");
  }

  for (const auto& l : net.lines) {
    std::ostringstream who;
    who << "line " << l.id;
    if (!(l.f_max > 0.0)) add(who.str() + ": non-positive flow limit");
    if (static_cast<int>(l.ptdf.size()) != net.n_buses) add(who.str() + ": PTDF row length mismatch");
    for (double v : l.ptdf)
      if (!std::isfinite(v)) {
        add(who.str() + ": non-finite PTDF entry");
        break;
      }
  }

  // gens_by_bus must partition {0, ..., G-1}.
  if (static_cast<int>(net.gens_by_bus.size()) != net.n_buses) {
    add("gens_by_bus has wrong number of bus sets");
  } else {
    std::set<int> seen;
    for (int n = 0; n < net.n_buses; ++n) {
      for (int g : net.gens_by_bus[n]) {
        if (g < 0 || g >= net.n_gens()) {
          std::ostringstream msg;
          msg << "generator " << g << " in bus set " << n << " does not exist";
          add(msg.str());
          continue;
        }
        if (!seen.insert(g).second) {
          std::ostringstream msg;
          msg << "generator " << g << " in multiple bus sets";
          add(msg.str());
        }
        if (net.generators[g].bus != n) {
          std::ostringstream msg;
          msg << "generator " << g << " listed under bus " << n << " but declares bus "
              << net.generators[g].bus;
          add(msg.str());
        }
      }
    }
    for (int g = 0; g < net.n_gens(); ++g) {
      if (!seen.count(g)) {
        std::ostringstream msg;
        msg << "generator " << g << " missing from every bus set";
        add(msg.str());
      }
    }
  }

  return violations;
}

}  // namespace vppsim
