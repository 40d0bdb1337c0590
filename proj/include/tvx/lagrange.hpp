#pragma once

// Lagrange multipliers from cone separation, the strong-minimum transform and
// the equivalent qualification conditions for a pair of polyhedral functions.

#include <optional>
#include <string>

#include "tvx/cones.hpp"
#include "tvx/transversality.hpp"

namespace tvx {

struct Separation {
  Vec xi;  // <xi, c> >= 0 on C, < 0 on the open cone over D_dir + r B
  double margin = 0.0;  // min over the sampled D of -<xi, d> / |d|
};

/// Separates a closed convex cone from the open cone over the ball
/// dir + radius B. nullopt when C is the whole space or when the ball meets C.
std::optional<Separation> separate_cones(const PolyCone& C, const Vec& dir, double radius);

/// f -> min over S, with f given by its epigraph in X x R.
struct OptProblem {
  SetSpec epi;
  SetSpec S;
  Vec x0;
  double fx0 = 0.0;

  /// Checks x0 ∈ S and (x0, f(x0)) ∈ epi f.
  static OptProblem make(SetSpec epi, SetSpec S, Vec x0, double fx0);
  static OptProblem make(const PolyFunction& f, SetSpec S, Vec x0);
  Vec base() const;  // (x0, f(x0))
};

struct MultiplierPair {
  Vec xi;
  double eta = 0.0;  // 0 or 1
};

struct MultiplierChecks {
  bool nonzero = false;     // (xi, eta) != 0
  bool eta_binary = false;  // eta in {0, 1}
  bool constraint = false;  // <xi, v> <= 0 on C_S
  bool objective = false;   // <xi, w> + eta s >= 0 on C_epi
  int samples = 0;
  bool all() const { return nonzero && eta_binary && constraint && objective; }
};

/// Direct evaluation of the four conditions on every generator plus `samples`
/// random conic combinations.
MultiplierChecks verify_multiplier(const MultiplierPair& m, const PolyCone& Cepi, const PolyCone& CS,
                                   int samples = 100, std::uint64_t seed = 0x1a6);

struct DenseVerdict {
  std::string message;
  std::optional<Vec> descent;  // (v, s) ∈ C_epi with v ∈ C_S and s < 0
  std::optional<TransversalityCertificate> corroboration;
};

struct MultiplierOutcome {
  std::optional<MultiplierPair> pair;
  MultiplierChecks checks;
  std::optional<DenseVerdict> dense;
  bool has_multiplier() const { return pair.has_value(); }
};

struct MultiplierOptions {
  bool validate_cones = true;
  bool corroborate = true;
  double corroboration_delta = 0.5;
};

/// Exactly one of a verified multiplier pair or the dense-difference verdict.
MultiplierOutcome multiplier_rule(const OptProblem& p, const PolyCone& Cepi, const PolyCone& CS,
                                  const MultiplierOptions& opt = {});

/// Same rule with the exact Clarke cones of epi f and S.
MultiplierOutcome multiplier_rule_massive(const OptProblem& p, const MultiplierOptions& opt = {});

/// For min c.x over a polyhedron: | xi - (A^T lambda) | with lambda the LP dual
/// multipliers, or nullopt when the LP does not attain its minimum at x0.
std::optional<double> kkt_residual(const Vec& c, const SetSpec& S, const Vec& x0, const MultiplierPair& m);

struct StrongMinimum {
  OptProblem problem;        // f + |x - x0|^2
  double cone_agreement = 0.0;  // fraction of sampled directions classified alike
  int directions = 0;
};

StrongMinimum strong_minimum_transform(const OptProblem& p, int directions = 32);

struct QualificationReport {
  bool epigraph_density = false;  // (i)
  bool lift_density = false;      // (ii)
  bool normal_cones = false;      // (iii)
  bool singular = false;          // (iv)
  PolyCone singular1 = PolyCone::zero(0);
  PolyCone singular2 = PolyCone::zero(0);
  bool agree() const {
    return epigraph_density == lift_density && lift_density == normal_cones && normal_cones == singular;
  }
};

/// Computes the four qualification conditions independently for two
/// polyhedral functions at x0. Error(Unsupported) for other epigraphs.
QualificationReport qualification_equivalences(const SetSpec& epi1, const SetSpec& epi2, const Vec& x0);

}  // namespace tvx
