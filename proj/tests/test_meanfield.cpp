#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "vppsim/meanfield.hpp"

using namespace vppsim;

namespace {

TransitionModel small_model(double zeta, bool deterministic_nd = false) {
  GridSpec spec;
  spec.storage_points = 5;
  spec.action_points = 3;
  spec.nd_points = deterministic_nd ? 1 : 2;
  const std::vector<double> profile{0.2, -0.1, 0.4};
  const TriangularSpec noise =
      deterministic_nd ? TriangularSpec{1.0, 1.0, 1.0} : TriangularSpec{0.8, 1.2, 1.0};
  return build_transition_model(MdpGrids::build(spec, profile, noise), zeta);
}

MeanField random_meanfield(const TransitionModel& m, KeyedRng& rng) {
  MeanField mf = MeanField::uniform(m.n_states(), m.n_actions());
  double total = 0.0;
  for (double& v : mf.mass) total += (v = -std::log(1.0 - rng.uniform()));
  for (double& v : mf.mass) v /= total;
  return mf;
}

Policy random_policy(const TransitionModel& m, KeyedRng& rng) {
  Policy p;
  p.n_states = m.n_states();
  p.n_actions = m.n_actions();
  p.probs.assign(static_cast<size_t>(p.n_states) * p.n_actions, 0.0);
  for (int s = 0; s < p.n_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < p.n_actions; ++a)
      if (!m.masked(s, a)) total += (p.at(s, a) = 0.05 + rng.uniform());
    for (int a = 0; a < p.n_actions; ++a) p.at(s, a) /= total;
  }
  return p;
}

}  // namespace

TEST_CASE("transition kernel rows sum to one") {
  for (double zeta : {0.0, 0.3, 1.0}) {
    const TransitionModel m = small_model(zeta);
    std::vector<double> row(m.n_states());
    for (int s = 0; s < m.n_states(); ++s) {
      for (int a = 0; a < m.n_actions(); ++a) {
        m.row(s, a, row);
        double total = 0.0;
        for (int i = 0; i < m.n_states(); ++i) {
          total += row[i];
          CHECK(row[i] == doctest::Approx(m.prob(i, s, a)).epsilon(1e-14));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("deterministic chain has one-hot kernel rows") {
  const TransitionModel m = small_model(0.0, /*deterministic_nd=*/true);
  std::vector<double> row(m.n_states());
  for (int s = 0; s < m.n_states(); ++s) {
    for (int a = 0; a < m.n_actions(); ++a) {
      m.row(s, a, row);
      int nonzero = 0;
      for (double v : row)
        if (v != 0.0) {
          ++nonzero;
          CHECK(v == doctest::Approx(1.0));
        }
      CHECK(nonzero == 1);
    }
  }
}

TEST_CASE("full regeneration makes storage uniform regardless of action") {
  const TransitionModel m = small_model(1.0);
  const int E = m.grids.storage.size();
  std::vector<double> row(m.n_states());
  m.row(m.grids.state_index(0, 0, 0), 2, row);
  for (int e = 0; e < E; ++e) {
    double mass_e = 0.0;
    for (int nd = 0; nd < m.grids.nd.n_points; ++nd)
      mass_e += row[m.grids.state_index(e, nd, 1)];
    CHECK(mass_e == doctest::Approx(1.0 / E).epsilon(1e-12));
  }
}

TEST_CASE("consistency update with zeta = 1 is the uniform distribution") {
  const TransitionModel m = small_model(0.3);
  KeyedRng rng(11);
  const MeanField mf = random_meanfield(m, rng);
  const Policy pi = random_policy(m, rng);
  const MeanField out = consistency_update(mf, pi, m, 1.0);
  const double expected = 1.0 / (m.n_states() * m.n_actions());
  for (double v : out.mass) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zeta = 0 point mass propagates along the deterministic chain") {
  const TransitionModel m = small_model(0.0, /*deterministic_nd=*/true);
  const MdpGrids& g = m.grids;
  const int a1 = 2;  // charge fully; feasible at the empty state
  const int s0 = g.state_index(0, 0, 0);
  const MeanField mf = MeanField::point_mass(m.n_states(), m.n_actions(), s0, 0);
  const Policy pi = Policy::deterministic(m, a1);
  REQUIRE(pi.at(s0, a1) == 1.0);

  const MeanField out = consistency_update(mf, pi, m, 0.0);
  // Successor: storage snaps from level + a, hour advances, nd deterministic.
  const int e1 = m.e_next[0 * m.n_actions() + a1];
  const int s1 = g.state_index(e1, 0, 1);
  for (int s = 0; s < m.n_states(); ++s)
    for (int a = 0; a < m.n_actions(); ++a)
      CHECK(out.at(s, a) == doctest::Approx(s == s1 && a == a1 ? 1.0 : 0.0));
}

TEST_CASE("consistency update maps the simplex to the simplex") {
  const TransitionModel m = small_model(0.2);
  KeyedRng rng(21);
  for (int k = 0; k < 20; ++k) {
    const MeanField mf = random_meanfield(m, rng);
    const Policy pi = random_policy(m, rng);
    for (auto convention : {KernelAction::Incoming, KernelAction::Outgoing}) {
      const MeanField out = consistency_update(mf, pi, m, 0.2, convention);
      CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-12));
      const double floor = 0.2 / (m.n_states() * m.n_actions());
      for (double v : out.mass) CHECK(v >= floor - 1e-15);
    }
  }
}

TEST_CASE("parallel update matches the dense serial reference") {
  const TransitionModel m = small_model(0.15);
  KeyedRng rng(31);
  for (int k = 0; k < 5; ++k) {
    const MeanField mf = random_meanfield(m, rng);
    const Policy pi = random_policy(m, rng);
    for (auto convention : {KernelAction::Incoming, KernelAction::Outgoing}) {
      const MeanField fast = consistency_update(mf, pi, m, 0.15, convention);
      const MeanField ref = consistency_update_ref(mf, pi, m, 0.15, convention);
      CHECK(fast.l1_distance(ref) <= 1e-13);
    }
  }
}

TEST_CASE("Gamma2 contraction constants never exceed 1 - zeta") {
  for (double zeta : {0.05, 0.5, 0.9}) {
    const TransitionModel m = small_model(zeta);
    KeyedRng rng(41);
    for (int k = 0; k < 100; ++k) {
      const Policy pi = random_policy(m, rng);
      const MeanField l1 = random_meanfield(m, rng);
      const MeanField l2 = random_meanfield(m, rng);
      const double lhs_mf =
          consistency_update(l1, pi, m, zeta).l1_distance(consistency_update(l2, pi, m, zeta));
      CHECK(lhs_mf <= (1.0 - zeta) * l1.l1_distance(l2) + 1e-9);

      const Policy pi2 = random_policy(m, rng);
      const double lhs_pi =
          consistency_update(l1, pi, m, zeta).l1_distance(consistency_update(l1, pi2, m, zeta));
      CHECK(lhs_pi <= (1.0 - zeta) * pi.max_row_l1_distance(pi2) + 1e-9);
    }
  }
}

TEST_CASE("repeated Gamma2 application converges geometrically") {
  const double zeta = 0.3;
  const TransitionModel m = small_model(zeta);
  KeyedRng rng(51);
  const Policy pi = random_policy(m, rng);
  MeanField mf = random_meanfield(m, rng);

  double prev_dist = -1.0;
  for (int it = 0; it < 60; ++it) {
    const MeanField next = consistency_update(mf, pi, m, zeta);
    const double dist = next.l1_distance(mf);
    if (prev_dist > 1e-13) CHECK(dist <= (1.0 - zeta) * prev_dist + 1e-12);
    prev_dist = dist;
    mf = next;
  }
  CHECK(prev_dist <= 1e-9);  // effectively at the fixed point
}

TEST_CASE("mean field to demand") {
  const TransitionModel m = small_model(0.1);
  const MdpGrids& g = m.grids;
  PopulationSpec pop;
  pop.total_capacity = 100.0;
  pop.efficiency = 0.9;
  pop.consumer_ref_capacity = 0.01;

  SUBCASE("point mass with zero action bids its net load") {
    const int e_idx = 2;  // level 0.5
    const int nd_idx = 0;
    const int s = g.state_index(e_idx, nd_idx, 0);
    const MeanField mf = MeanField::point_mass(m.n_states(), m.n_actions(), s, 1 /*a=0*/);
    const double d = meanfield_to_demand(mf, m, pop, 0.0);
    CHECK(d == doctest::Approx(100.0 * g.nd.value(0, nd_idx)).epsilon(1e-12));
  }
  SUBCASE("zero net load and zero actions leave only consumers") {
    GridSpec spec;
    spec.storage_points = 5;
    spec.action_points = 3;
    spec.nd_points = 1;
    const TransitionModel flat = build_transition_model(
        MdpGrids::build(spec, {0.0, 0.0, 0.0}, TriangularSpec{1.0, 1.0, 1.0}), 0.1);
    MeanField mf = MeanField::uniform(flat.n_states(), flat.n_actions());
    // Concentrate all mass on action 0 (index 1), uniformly over states.
    mf.mass.assign(mf.mass.size(), 0.0);
    for (int s = 0; s < flat.n_states(); ++s) mf.at(s, 1) = 1.0 / flat.n_states();
    const double d = meanfield_to_demand(mf, flat, pop, 123.0);
    CHECK(d == doctest::Approx(pop.consumer_ref_capacity * 123.0).epsilon(1e-12));
  }
  SUBCASE("demand is Lipschitz in the mean field") {
    KeyedRng rng(61);
    double max_nd = 0.0;
    for (int h = 0; h < g.nd.hours; ++h)
      for (int i = 0; i < g.nd.n_points; ++i) max_nd = std::max(max_nd, std::abs(g.nd.value(h, i)));
    const double bound = pop.total_capacity * (1.0 / pop.efficiency + max_nd);
    for (int k = 0; k < 50; ++k) {
      const MeanField a = random_meanfield(m, rng);
      const MeanField b = random_meanfield(m, rng);
      const double da = meanfield_to_demand(a, m, pop, 5.0);
      const double db = meanfield_to_demand(b, m, pop, 5.0);
      CHECK(std::abs(da - db) <= bound * a.l1_distance(b) + 1e-12);
    }
  }
}

TEST_CASE("aggregate storage is the capacity-weighted mean") {
  CHECK(aggregate_storage({0.5, 0.5, 0.5}, {1.0, 2.0, 3.0}) == doctest::Approx(0.5));
  CHECK(aggregate_storage({0.0, 1.0}, {0.010, 0.030}) == doctest::Approx(0.75));
  CHECK(aggregate_storage({0.37}, {0.02}) == doctest::Approx(0.37));
}
