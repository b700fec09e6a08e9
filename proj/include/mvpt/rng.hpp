#pragma once

#include <cstdint>
#include <random>

namespace mvpt {

// Seeded random source with a pinned algorithm so that emitted datasets are
// reproducible: mt19937_64 for bits, 53-bit mantissa uniforms, and polar
// Box-Muller normals (sqrt/log only). The algorithm name is written into the
// header of every generated data file ("mt19937_64+polar-box-muller").
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr const char* kAlgorithm = "mt19937_64+polar-box-muller";

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via polar Box-Muller (Marsaglia). One spare value is
  // cached, which is part of the pinned stream behaviour.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mvpt
