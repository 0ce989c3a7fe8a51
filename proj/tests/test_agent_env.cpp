#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vppsim/agent_env.hpp"
#include "vppsim/grids.hpp"

using namespace vppsim;

TEST_CASE("time maps split global steps into hour and day") {
  TimeIndex t{27, 12};
  CHECK(t.hour() == 3);
  CHECK(t.day() == 2);
  CHECK(TimeIndex{0, 12}.hour() == 0);
  CHECK(TimeIndex{11, 12}.day() == 0);
  CHECK(TimeIndex{12, 12}.hour() == 0);
}

TEST_CASE("snap_index resolves midpoints toward the lower value") {
  const std::vector<double> grid{0.0, 0.5, 1.0};
  CHECK(snap_index(grid, 0.25) == 0);  // exact midpoint
  CHECK(snap_index(grid, 0.26) == 1);
  CHECK(snap_index(grid, -3.0) == 0);
  CHECK(snap_index(grid, 3.0) == 2);
  CHECK(snap_index(grid, 0.74) == 1);
}

TEST_CASE("per-type capacity allocation reproduces the case-study numbers") {
  PopulationSpec pop;
  pop.m_prosumers = 650;
  pop.type_share = {500.0 / 650.0, 100.0 / 650.0, 50.0 / 650.0};
  pop.type_theta = {1.0, 2.0, 3.0};
  pop.total_capacity = 8.5;  // MWh
  CHECK(per_prosumer_capacity(pop, 0) == doctest::Approx(0.010).epsilon(1e-12));
  CHECK(per_prosumer_capacity(pop, 1) == doctest::Approx(0.020).epsilon(1e-12));
  CHECK(per_prosumer_capacity(pop, 2) == doctest::Approx(0.030).epsilon(1e-12));

  // Totals add back up to the bus cap.
  const double total = 500 * per_prosumer_capacity(pop, 0) + 100 * per_prosumer_capacity(pop, 1) +
                       50 * per_prosumer_capacity(pop, 2);
  CHECK(total == doctest::Approx(8.5).epsilon(1e-12));
}

TEST_CASE("efficiency adjustment") {
  CHECK(efficiency_adjust(0.5, -0.8, 0.9) == doctest::Approx(-0.45));
  CHECK(efficiency_adjust(0.8, 0.5, 0.8) == doctest::Approx(0.25));
  for (double e : {0.0, 0.3, 1.0})
    for (double eta : {0.5, 0.9, 1.0}) CHECK(efficiency_adjust(e, 0.0, eta) == 0.0);
}

TEST_CASE("storage transition clips to [0, 1]") {
  CHECK(storage_transition(0.9, 0.5) == doctest::Approx(1.0));
  CHECK(storage_transition(0.2, -0.5) == doctest::Approx(0.0));
  CHECK(storage_transition(0.5, 0.25) == doctest::Approx(0.75));
}

TEST_CASE("action masking bounds actions by free and stored capacity") {
  ActionGrid grid = ActionGrid::uniform(11);  // step 0.2
  SUBCASE("e = 0.8 keeps -0.8..0.2") {
    const auto mask = action_mask(0.8, grid);
    for (size_t i = 0; i < grid.levels.size(); ++i) {
      const bool want = grid.levels[i] >= -0.8 - 1e-12 && grid.levels[i] <= 0.2 + 1e-12;
      CHECK(mask[i] == want);
    }
  }
  SUBCASE("empty battery cannot discharge") {
    const auto mask = action_mask(0.0, grid);
    for (size_t i = 0; i < grid.levels.size(); ++i)
      if (grid.levels[i] < 0.0) CHECK(!mask[i]);
    CHECK(mask[grid.zero_index()]);
  }
  SUBCASE("full battery cannot charge") {
    const auto mask = action_mask(1.0, grid);
    for (size_t i = 0; i < grid.levels.size(); ++i)
      if (grid.levels[i] > 0.0) CHECK(!mask[i]);
    CHECK(mask[grid.zero_index()]);
  }
}

TEST_CASE("reward sign convention and linearity") {
  std::vector<double> lmp(12, 0.0);
  lmp[3] = 50.0;
  AgentState s{0.5, 0.2, 3};
  CHECK(reward(s, 0.0, lmp, 10.0, 1.0) == doctest::Approx(-100.0));

  lmp[3] = 40.0;
  AgentState s2{0.5, 0.1, 3};
  CHECK(reward(s2, -0.5, lmp, 10.0, 1.0) == doctest::Approx(160.0));

  // Zero net position earns zero whatever the price.
  AgentState s3{0.5, 0.0, 3};
  for (double price : {-10.0, 0.0, 77.0}) {
    lmp[3] = price;
    CHECK(reward(s3, 0.0, lmp, 10.0, 0.9) == doctest::Approx(0.0));
  }

  // Linear in price and capacity.
  lmp[3] = 13.0;
  const double base = reward(s, 0.25, lmp, 10.0, 0.9);
  lmp[3] = 26.0;
  CHECK(reward(s, 0.25, lmp, 10.0, 0.9) == doctest::Approx(2.0 * base));
  lmp[3] = 13.0;
  CHECK(reward(s, 0.25, lmp, 30.0, 0.9) == doctest::Approx(3.0 * base));
}

TEST_CASE("regularized reward") {
  ActionGrid grid = ActionGrid::uniform(5);
  std::vector<double> lmp(4, 20.0);
  AgentState s{0.5, 0.1, 1};
  RegularizerSpec reg{0.3};

  SUBCASE("point mass has no entropy term") {
    std::vector<double> onehot{0.0, 0.0, 1.0, 0.0, 0.0};
    CHECK(regularized_reward(s, onehot, grid, lmp, 10.0, 0.9, reg) ==
          doctest::Approx(reward(s, grid.levels[2], lmp, 10.0, 0.9)));
  }
  SUBCASE("uniform distribution earns the max entropy bonus") {
    const int m = grid.size();
    std::vector<double> uniform(m, 1.0 / m);
    double expected = 0.0;
    for (int i = 0; i < m; ++i) expected += reward(s, grid.levels[i], lmp, 10.0, 0.9) / m;
    expected += reg.alpha * std::log(m);
    CHECK(regularized_reward(s, uniform, grid, lmp, 10.0, 0.9, reg) == doctest::Approx(expected));
  }
  SUBCASE("alpha = 0 reduces to the expected reward") {
    std::vector<double> dist{0.1, 0.2, 0.3, 0.25, 0.15};
    RegularizerSpec off{0.0};
    double expected = 0.0;
    for (int i = 0; i < grid.size(); ++i)
      expected += dist[i] * reward(s, grid.levels[i], lmp, 10.0, 0.9);
    CHECK(regularized_reward(s, dist, grid, lmp, 10.0, 0.9, off) == doctest::Approx(expected));
  }
}

TEST_CASE("regularized reward is alpha-strongly concave in the distribution") {
  ActionGrid grid = ActionGrid::uniform(5);
  std::vector<double> lmp(4, 35.0);
  AgentState s{0.4, -0.1, 2};
  RegularizerSpec reg{0.25};
  KeyedRng rng(99);

  auto random_simplex = [&rng](int m) {
    std::vector<double> v(m);
    double total = 0.0;
    for (double& x : v) total += (x = 0.05 + rng.uniform());
    for (double& x : v) x /= total;
    return v;
  };

  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_simplex(grid.size());
    const auto y = random_simplex(grid.size());
    std::vector<double> mid(grid.size());
    double dist2 = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
      mid[i] = 0.5 * (x[i] + y[i]);
      dist2 += (x[i] - y[i]) * (x[i] - y[i]);
    }
    const double fx = regularized_reward(s, x, grid, lmp, 10.0, 0.9, reg);
    const double fy = regularized_reward(s, y, grid, lmp, 10.0, 0.9, reg);
    const double fm = regularized_reward(s, mid, grid, lmp, 10.0, 0.9, reg);
    CHECK(fm >= 0.5 * (fx + fy) + reg.rho() / 8.0 * dist2 - 1e-12);
  }
}

TEST_CASE("net-load sampling") {
  const std::vector<double> mean{0.3, -0.2, 0.0, 0.5};

  SUBCASE("degenerate noise returns the profile exactly") {
    TriangularSpec none{1.0, 1.0, 1.0};
    NdGrid grid = NdGrid::build(mean, none, 5);
    KeyedRng rng(1);
    for (int h = 0; h < 4; ++h) {
      const int idx = sample_net_load(grid, mean, none, h, rng);
      CHECK(grid.value(h, idx) == doctest::Approx(mean[h]));
    }
  }
  SUBCASE("zero profile hour always yields zero") {
    TriangularSpec noise{0.8, 1.2, 1.0};
    NdGrid grid = NdGrid::build(mean, noise, 5);
    KeyedRng rng(2);
    for (int k = 0; k < 50; ++k) {
      const int idx = sample_net_load(grid, mean, noise, 2, rng);
      CHECK(grid.value(2, idx) == doctest::Approx(0.0));
    }
  }
  SUBCASE("sample mean tracks the profile mean within 1%") {
    TriangularSpec noise{0.8, 1.2, 1.0};  // mean exactly 1
    NdGrid grid = NdGrid::build(mean, noise, 5);
    KeyedRng rng(3);
    double acc = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) acc += grid.value(0, sample_net_load(grid, mean, noise, 0, rng));
    CHECK(std::abs(acc / n - mean[0]) <= 0.01 * std::abs(mean[0]));
  }
  SUBCASE("grid probabilities are a distribution and respect negative scaling") {
    TriangularSpec noise{0.8, 1.2, 1.0};
    NdGrid grid = NdGrid::build(mean, noise, 5);
    for (int h = 0; h < 4; ++h) {
      double total = 0.0;
      for (int i = 0; i < grid.n_points; ++i) {
        CHECK(grid.probs[h][i] >= 0.0);
        total += grid.probs[h][i];
        if (i > 0) CHECK(grid.values[h][i] >= grid.values[h][i - 1]);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Negative-mean hour: values are negative multiples of the noise.
    CHECK(grid.values[1].front() == doctest::Approx(-0.2 * noise.quantile(0.9)));
    CHECK(grid.values[1].back() == doctest::Approx(-0.2 * noise.quantile(0.1)));
  }
}

TEST_CASE("storage stays in [0,1] under arbitrary action sequences") {
  StorageGrid grid = StorageGrid::uniform(21);
  KeyedRng rng(5);
  double e = 0.5;
  for (int k = 0; k < 1000; ++k) {
    const double a = rng.uniform(-2.0, 2.0);  // even mask-violating actions
    e = grid.levels[grid.snap(storage_transition(e, a))];
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}
