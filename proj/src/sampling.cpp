#include "tvx/sampling.hpp"

#include <cmath>
#include <numbers>

namespace tvx {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  while (u <= 0.0) u = uniform();
  const double v = uniform();
  const double r = std::sqrt(-2.0 * std::log(u));
  spare_ = r * std::sin(2.0 * std::numbers::pi * v);
  have_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * v);
}

Vec Rng::unit_vector(int dim) {
  Vec v(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (int i = 0; i < dim; ++i) v[i] = normal();
    n = v.norm();
  }
  return v / n;
}

Vec Rng::in_ball(const Vec& center, double radius) {
  const int dim = static_cast<int>(center.size());
  const Vec u = unit_vector(dim);
  const double r = radius * std::pow(uniform(), 1.0 / dim);
  return center + r * u;
}

Vec Rng::in_ball_log_radius(const Vec& center, double radius, double floor) {
  const int dim = static_cast<int>(center.size());
  const Vec u = unit_vector(dim);
  const double r = radius * std::exp(std::log(floor) * uniform());
  return center + r * u;
}

std::vector<Vec> circle_net(int count) {
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / count;
    Vec v(2);
    v << std::cos(a), std::sin(a);
    out.push_back(v);
  }
  return out;
}

std::vector<Vec> fibonacci_sphere(int count) {
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(count));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * k;
    Vec v(3);
    v << r * std::cos(phi), r * std::sin(phi), z;
    out.push_back(v);
  }
  return out;
}

std::vector<Vec> direction_net(int dim, int count, std::uint64_t seed) {
  if (dim == 1) {
    Vec a(1), b(1);
    a << 1.0;
    b << -1.0;
    return {a, b};
  }
  if (dim == 2) return circle_net(count);
  if (dim == 3) return fibonacci_sphere(count);
  std::vector<Vec> out;
  for (int i = 0; i < dim; ++i) {
    out.push_back(Vec::Unit(dim, i));
    out.push_back(-Vec::Unit(dim, i));
  }
  Rng rng(seed);
  while (static_cast<int>(out.size()) < count) out.push_back(rng.unit_vector(dim));
  return out;
}

}  // namespace tvx
