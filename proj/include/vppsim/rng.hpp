#pragma once

#include <cmath>
#include <cstdint>

namespace vppsim {

// Labels for independent random streams. Every stochastic draw in a run is
// keyed by (seed, purpose, t, bus, agent), so results do not depend on
// thread scheduling or evaluation order.
enum class Draw : std::uint64_t {
  ProsumerNd = 1,
  ConsumerNd = 2,
  Action = 3,
  Regen = 4,
  RegenLevel = 5,
  Train = 6,
  RenewableCf = 7,
  Generic = 8,
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator (splitmix64 over a hashed key). Cheap to construct
// per agent per step; streams with distinct keys are independent.
class KeyedRng {
 public:
  explicit KeyedRng(std::uint64_t seed, Draw purpose = Draw::Generic,
                    std::int64_t t = 0, std::int64_t bus = 0,
                    std::int64_t agent = 0) {
    state_ = mix64(seed);
    state_ = mix64(state_ ^ static_cast<std::uint64_t>(purpose));
    state_ = mix64(state_ ^ static_cast<std::uint64_t>(t));
    state_ = mix64(state_ ^ static_cast<std::uint64_t>(bus));
    state_ = mix64(state_ ^ static_cast<std::uint64_t>(agent));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform over {0, ..., n-1}.
  int uniform_int(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n)) % n;
  }

  // Inverse-CDF sample of the triangular distribution on [lo, hi] with mode.
  double triangular(double lo, double hi, double mode) {
    if (hi <= lo) return lo;
    const double u = uniform();
    const double fc = (mode - lo) / (hi - lo);
    if (u < fc) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
    return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
  }

 private:
  std::uint64_t state_;
};

// Triangular distribution parameters (lo <= mode <= hi).
struct TriangularSpec {
  double lo = 1.0;
  double hi = 1.0;
  double mode = 1.0;

  double mean() const { return (lo + hi + mode) / 3.0; }
  bool degenerate() const { return hi - lo <= 0.0; }

  double sample(KeyedRng& rng) const { return rng.triangular(lo, hi, mode); }

  // CDF of the distribution (step function when degenerate).
  double cdf(double x) const {
    if (degenerate()) return x < lo ? 0.0 : 1.0;
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    if (x < mode) return (x - lo) * (x - lo) / ((hi - lo) * (mode - lo));
    if (x > mode) return 1.0 - (hi - x) * (hi - x) / ((hi - lo) * (hi - mode));
    return (mode - lo) / (hi - lo);
  }

  // Quantile (inverse CDF) at probability u in [0, 1].
  double quantile(double u) const {
    if (degenerate()) return lo;
    const double fc = (mode - lo) / (hi - lo);
    if (u < fc) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
    return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
  }
};

}  // namespace vppsim
