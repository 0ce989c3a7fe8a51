#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "vppsim/dispatch.hpp"

using namespace vppsim;
using namespace vppsim::testutil;

TEST_CASE("validate_network flags broken invariants") {
  Network net = make_network(2, {{0, 0, 0.01, 20.0, 100.0}, {1, 1, 0.02, 30.0, 100.0}});
  CHECK(validate_network(net).empty());

  SUBCASE("generator claimed by two buses") {
    net.gens_by_bus[1].push_back(0);
    const auto v = validate_network(net);
    REQUIRE(!v.empty());
    bool found = false;
    for (const auto& msg : v) found |= msg.find("multiple bus sets") != std::string::npos;
    CHECK(found);
  }
  SUBCASE("non-positive flow limit") {
    net.lines.push_back({0, {0.5, -0.5}, 0.0});
    const auto v = validate_network(net);
    REQUIRE(!v.empty());
    CHECK(v[0].find("non-positive flow limit") != std::string::npos);
  }
  SUBCASE("one-bus one-gen net is clean") {
    Network tiny = make_network(1, {{0, 0, 0.01, 20.0, 100.0}});
    CHECK(validate_network(tiny).empty());
  }
}

TEST_CASE("two-generator single-bus dispatch matches closed form and grid search") {
  Network net = make_network(1, {{0, 0, 0.01, 20.0, 200.0}, {1, 0, 0.02, 30.0, 200.0}});
  DemandVector demand{{100.0}};
  const EDSolution sol = solve_ed(net, demand);

  CHECK(sol.dispatch[0] == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(sol.dispatch[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.hub_price == doctest::Approx(22.0).epsilon(1e-10));
  CHECK(sol.gen_duals_lo[1] == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(kkt_residual(net, demand, sol) <= 1e-8);

  double oracle_p0 = 0.0;
  const double oracle_cost = grid_search_dispatch_cost(net, 100.0, 0.01, &oracle_p0);
  CHECK(std::abs(oracle_p0 - sol.dispatch[0]) <= 0.01);
  CHECK(sol.objective == doctest::Approx(oracle_cost).epsilon(1e-6));
}

TEST_CASE("zero demand with positive linear costs dispatches nothing") {
  Network net = make_network(2, {{0, 0, 0.01, 20.0, 100.0}, {1, 1, 0.03, 25.0, 80.0}});
  DemandVector demand{{0.0, 0.0}};
  const EDSolution sol = solve_ed(net, demand);
  CHECK(sol.dispatch[0] == doctest::Approx(0.0));
  CHECK(sol.dispatch[1] == doctest::Approx(0.0));
  CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("capacity shortfall raises an infeasibility certificate") {
  Network net = make_network(1, {{0, 0, 0.01, 20.0, 50.0}});
  DemandVector demand{{80.0}};
  try {
    solve_ed(net, demand);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.certificate.kind == InfeasibleCertificate::Kind::CapacityShortfall);
    CHECK(e.certificate.total_capacity == doctest::Approx(50.0));
    CHECK(e.certificate.total_demand == doctest::Approx(80.0));
  }
}

TEST_CASE("flow-infeasible island raises a restoration certificate") {
  // All generation sits behind one line that cannot carry the load.
  Network net = make_network(2, {{0, 0, 0.01, 20.0, 200.0}},
                             {{0, {0.0, 1.0}, 10.0}});
  DemandVector demand{{0.0, 50.0}};
  try {
    solve_ed(net, demand);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.certificate.kind == InfeasibleCertificate::Kind::FlowRestoration);
    REQUIRE(e.certificate.line_residuals.size() == 1);
    CHECK(e.certificate.line_residuals[0] == doctest::Approx(40.0).epsilon(1e-4));
  }
}

TEST_CASE("compute_lmps reproduces the congestion formula") {
  Network net = make_network(2, {{0, 0, 0.01, 20.0, 400.0}}, {{0, {0.5, -0.5}, 100.0}});

  SUBCASE("no active line duals: LMP equals hub everywhere") {
    const auto lmps = compute_lmps(net, 30.0, {0.0}, {0.0});
    CHECK(lmps[0] == doctest::Approx(30.0));
    CHECK(lmps[1] == doctest::Approx(30.0));
  }
  SUBCASE("direct substitution") {
    const auto lmps = compute_lmps(net, 30.0, {0.0}, {4.0});
    CHECK(lmps[0] == doctest::Approx(32.0));
    CHECK(lmps[1] == doctest::Approx(28.0));
  }
}

TEST_CASE("congested triangle: LMPs match the finite-difference oracle") {
  const Network net = triangle_network(60.0);
  const DemandVector demand{{0.0, 120.0, 0.0}};
  const EDSolution sol = solve_ed(net, demand);
  CHECK(kkt_residual(net, demand, sol) <= 1e-8);

  bool congested = false;
  for (int l = 0; l < net.n_lines(); ++l)
    congested |= sol.line_duals_lo[l] > 1e-6 || sol.line_duals_hi[l] > 1e-6;
  CHECK(congested);

  for (int bus = 0; bus < 3; ++bus) {
    const double fd = lmp_sensitivity_oracle(net, demand, bus, 1e-3);
    CHECK(std::abs(sol.lmps[bus] - fd) <= 1e-3);
  }
}

TEST_CASE("sensitivity oracle on the single-bus instance") {
  Network net = make_network(1, {{0, 0, 0.01, 20.0, 200.0}, {1, 0, 0.02, 30.0, 200.0}});
  const DemandVector demand{{100.0}};
  const double fd = lmp_sensitivity_oracle(net, demand, 0, 1e-3);
  CHECK(std::abs(fd - 22.0) <= 1e-3);
}

TEST_CASE("uncongested two-bus network prices both buses identically") {
  Network net = make_network(2, {{0, 0, 0.01, 20.0, 300.0}, {1, 1, 0.02, 28.0, 300.0}},
                             {{0, {0.5, -0.5}, 1000.0}});
  const DemandVector demand{{40.0, 70.0}};
  const EDSolution sol = solve_ed(net, demand);
  CHECK(std::abs(sol.lmps[0] - sol.lmps[1]) <= 1e-8);
  const double fd0 = lmp_sensitivity_oracle(net, demand, 0, 1e-4);
  const double fd1 = lmp_sensitivity_oracle(net, demand, 1, 1e-4);
  CHECK(std::abs(fd0 - fd1) <= 1e-6);
}

TEST_CASE("random feasible instances satisfy the KKT system") {
  int congested_count = 0;
  for (int k = 0; k < 60; ++k) {
    const auto [net, demand] = random_instance(1000 + k);
    CAPTURE(k);
    const EDSolution sol = solve_ed(net, demand);
    CHECK(kkt_residual(net, demand, sol) <= 1e-8);

    bool line_active = false;
    for (int l = 0; l < net.n_lines(); ++l)
      line_active |= sol.line_duals_lo[l] > 1e-9 || sol.line_duals_hi[l] > 1e-9;
    if (line_active) ++congested_count;
    if (!line_active) {
      for (int n = 0; n < net.n_buses; ++n)
        CHECK(std::abs(sol.lmps[n] - sol.hub_price) <= 1e-8);
    }
  }
  CHECK(congested_count > 0);  // generator must exercise congestion
}

TEST_CASE("monotone objective in total demand (uncongested interior)") {
  Network net = make_network(1, {{0, 0, 0.01, 20.0, 500.0}, {1, 0, 0.02, 30.0, 500.0}});
  double prev = solve_ed(net, DemandVector{{10.0}}).objective;
  for (double d = 20.0; d <= 200.0; d += 10.0) {
    const double obj = solve_ed(net, DemandVector{{d}}).objective;
    CHECK(obj >= prev - 1e-12);
    prev = obj;
  }
}

TEST_CASE("a line with infinite limit changes nothing") {
  const Network base = triangle_network(60.0);
  const DemandVector demand{{0.0, 120.0, 0.0}};
  const EDSolution sol_base = solve_ed(base, demand);

  Network widened = base;
  widened.lines.push_back({3, {0.9, -0.4, 0.1}, std::numeric_limits<double>::infinity()});
  const EDSolution sol_wide = solve_ed(widened, demand);

  for (int g = 0; g < base.n_gens(); ++g)
    CHECK(std::abs(sol_base.dispatch[g] - sol_wide.dispatch[g]) <= 1e-9);
  for (int n = 0; n < base.n_buses; ++n)
    CHECK(std::abs(sol_base.lmps[n] - sol_wide.lmps[n]) <= 1e-9);
}

TEST_CASE("lmp lipschitz estimator") {
  SUBCASE("identical demand pairs contribute zero") {
    Network net = make_network(1, {{0, 0, 0.01, 20.0, 400.0}});
    const auto est = estimate_lmp_lipschitz(
        net, [](KeyedRng&) { return std::make_pair(DemandVector{{100.0}}, DemandVector{{100.0}}); },
        10, 1);
    CHECK(est.l_lambda == doctest::Approx(0.0));
  }
  SUBCASE("single generator slope equals 2a") {
    Network net = make_network(1, {{0, 0, 0.013, 20.0, 500.0}});
    const auto est = estimate_lmp_lipschitz(
        net,
        [](KeyedRng& rng) {
          return std::make_pair(DemandVector{{rng.uniform(10.0, 400.0)}},
                                DemandVector{{rng.uniform(10.0, 400.0)}});
        },
        200, 2);
    CHECK(est.l_lambda == doctest::Approx(2.0 * 0.013).epsilon(1e-6));
  }
  SUBCASE("congested triangle stays finite and positive") {
    const Network net = triangle_network(60.0);
    const auto est = estimate_lmp_lipschitz(
        net,
        [](KeyedRng& rng) {
          DemandVector a{{rng.uniform(0.0, 40.0), rng.uniform(60.0, 160.0), rng.uniform(0.0, 40.0)}};
          DemandVector b{{rng.uniform(0.0, 40.0), rng.uniform(60.0, 160.0), rng.uniform(0.0, 40.0)}};
          return std::make_pair(a, b);
        },
        500, 3);
    CHECK(est.l_lambda > 0.0);
    CHECK(std::isfinite(est.l_lambda));
    CHECK(est.infeasible_skipped == 0);
  }
}
