#pragma once

// Polyhedral convex cones with exact integer arithmetic, tangent cones of
// closed sets, and the sampled surrogate used for nonconvex sets.

#include <gmpxx.h>

#include <functional>
#include <optional>
#include <vector>

#include "tvx/sets.hpp"

namespace tvx {

using ZVec = std::vector<mpz_class>;

inline constexpr int kDefaultRayCap = 256;

/// Exact conversion of a double vector to a primitive integer vector with the
/// same direction (every finite double is a dyadic rational).
ZVec to_exact(const Vec& v);
Vec to_double(const ZVec& v);

/// Generators of a cone: a lineality basis (in reduced row echelon form,
/// scaled to primitive integers) plus extreme rays reduced modulo it.
struct ConeGenerators {
  std::vector<ZVec> lineality;
  std::vector<ZVec> rays;

  bool operator==(const ConeGenerators&) const = default;
};

/// Closed convex polyhedral cone in R^dim, stored in canonical form as both
/// generators and polar generators. cone(generators) = {v : h.v <= 0 for every
/// polar generator h}; lineality of the polar gives equality normals.
class PolyCone {
 public:
  static PolyCone from_generators(int dim, const std::vector<Vec>& gens, int ray_cap = kDefaultRayCap);
  static PolyCone from_halfspaces(int dim, const std::vector<Vec>& normals, const std::vector<Vec>& equalities = {},
                                  int ray_cap = kDefaultRayCap);
  static PolyCone from_exact_generators(int dim, const std::vector<ZVec>& gens, int ray_cap = kDefaultRayCap);
  static PolyCone from_exact_halfspaces(int dim, const std::vector<ZVec>& normals, int ray_cap = kDefaultRayCap);
  static PolyCone full(int dim);
  static PolyCone zero(int dim);

  int dim() const { return dim_; }
  const ConeGenerators& exact_generators() const { return gens_; }
  const ConeGenerators& exact_polar() const { return polar_; }

  /// Conic generators as unit vectors; each lineality direction appears with
  /// both signs.
  std::vector<Vec> generators() const;
  /// Normals h of {v : h.v <= 0}, unit length; equalities appear as +-pairs.
  std::vector<Vec> halfspaces() const;
  std::vector<Vec> equalities() const;
  std::vector<Vec> facets() const;

  bool is_full() const { return polar_.lineality.empty() && polar_.rays.empty(); }
  bool is_zero() const { return gens_.lineality.empty() && gens_.rays.empty(); }
  /// Dimension of the linear span of the cone.
  int span_dim() const;

  bool contains(const Vec& v, double tol = 1e-9) const;
  bool contains_exact(const ZVec& v) const;
  /// Exact containment this ⊂ other.
  bool subset_of(const PolyCone& other) const;

  bool operator==(const PolyCone& other) const {
    return dim_ == other.dim_ && gens_ == other.gens_ && polar_ == other.polar_;
  }

 private:
  PolyCone(int dim, ConeGenerators gens, ConeGenerators polar)
      : dim_(dim), gens_(std::move(gens)), polar_(std::move(polar)) {}
  friend PolyCone polar(const PolyCone& C);

  int dim_ = 0;
  ConeGenerators gens_;
  ConeGenerators polar_;
};

PolyCone polar(const PolyCone& C);
PolyCone negate(const PolyCone& C);
PolyCone cone_sum(const PolyCone& C1, const PolyCone& C2);
PolyCone cone_diff(const PolyCone& C1, const PolyCone& C2);
PolyCone cone_intersect(const PolyCone& C1, const PolyCone& C2);
PolyCone cone_product(const PolyCone& C1, const PolyCone& C2);
/// The half-line (-inf, 0] as a cone in R.
PolyCone nonpositive_halfline();

struct DensityResult {
  bool dense = false;
  /// Nonzero w in polar(C1) ∩ -polar(C2) when the difference is not dense.
  std::optional<Vec> witness;
};

/// C1 - C2 is dense (equivalently all of R^n) iff polar(C1) ∩ -polar(C2) = {0}.
DensityResult is_dense_difference(const PolyCone& C1, const PolyCone& C2);

/// Orthogonal projection of v onto C (the nearest cone point).
Vec project_onto_cone(const PolyCone& C, const Vec& v);
double distance_to_cone(const PolyCone& C, const Vec& v);

// ---------------------------------------------------------------------------
// Tangent cones

inline constexpr double kActivityTol = 1e-9;

/// Bouligand (= derivable = Clarke) cone of a polyhedral set at x0.
PolyCone tangent_cone_polyhedral(const SetSpec& S, const Vec& x0);

/// Clarke cone of a convex variant (polyhedral, ball, affine, their translates
/// and products). Throws Error(Unsupported) for nonconvex variants.
PolyCone clarke_cone_convex(const SetSpec& S, const Vec& x0);

enum class Membership { In, Out, Undecided };
const char* to_string(Membership m);

struct SampledConeOptions {
  double t0 = 0.5;
  double t_floor = 1e-8;
  double tol = 1e-4;
};

/// Geometric grid t0, t0/2, ... down to (and not below) t_floor.
std::vector<double> tangent_grid(const SampledConeOptions& opt = {});

struct SampledCone {
  Vec basepoint;
  std::vector<double> tgrid;
  std::vector<Vec> directions;
  /// residuals[k][j] = dist(x0 + t_j v_k, S) / t_j
  std::vector<std::vector<double>> residuals;
  std::vector<Membership> bouligand;
  std::vector<Membership> derivable;
  int undecided = 0;
};

struct DirectionProfile {
  std::vector<double> residuals;
  Membership bouligand = Membership::Undecided;
  Membership derivable = Membership::Undecided;
};

/// Residual profile of a single direction. Bouligand: IN when the grid minimum
/// is below tol, OUT when the whole profile stays above 10 tol. Derivable uses
/// the projection curve and requires the small-t tail of the grid to be below
/// tol.
DirectionProfile classify_direction(const SetSpec& S, const Vec& x0, const Vec& v,
                                    const SampledConeOptions& opt = {});

/// Same classification against an arbitrary distance function (used for
/// A∩B when only a distance oracle is available).
DirectionProfile classify_direction(const std::function<double(const Vec&)>& dist, const Vec& x0, const Vec& v,
                                    const SampledConeOptions& opt = {});

/// Classifies `budget` directions of a deterministic net. Throws
/// Error(NonConvergence) when every direction is undecided.
SampledCone tangent_cone_sampled(const SetSpec& S, const Vec& x0, int budget, const SampledConeOptions& opt = {});
SampledCone tangent_cone_sampled(const SetSpec& S, const Vec& x0, const std::vector<Vec>& directions,
                                 const SampledConeOptions& opt = {});

}  // namespace tvx
