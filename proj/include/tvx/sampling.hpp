#pragma once

// Deterministic sampling primitives. Every estimator takes an explicit Rng so
// that results are reproducible for a fixed seed on any platform.

#include <cstdint>
#include <random>
#include <vector>

#include "tvx/numkernel.hpp"

namespace tvx {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) built from the top 53 bits of the engine output.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next() { return engine_(); }

  Vec unit_vector(int dim);
  /// Uniform in the closed ball of the given radius around center.
  Vec in_ball(const Vec& center, double radius);
  /// Log-uniform radius in [radius * floor, radius], uniform direction.
  Vec in_ball_log_radius(const Vec& center, double radius, double floor);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// `count` equally spaced unit vectors on the circle, starting at angle 0.
std::vector<Vec> circle_net(int count);
/// Fibonacci lattice of `count` points on the unit sphere in R^3.
std::vector<Vec> fibonacci_sphere(int count);
/// Deterministic direction net: circle in R^2, Fibonacci in R^3, seeded
/// random unit vectors plus +-e_i above.
std::vector<Vec> direction_net(int dim, int count, std::uint64_t seed = 0x5eed);

}  // namespace tvx
