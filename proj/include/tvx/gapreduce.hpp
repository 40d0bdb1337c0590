#pragma once

// Gap reduction: the constructive intersection solver driven by the
// tangential step oracle, the admissible starting radius, nonseparation
// sequences, product-space unit vectors and the metric-form check.

#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

#include "tvx/cones.hpp"
#include "tvx/transversality.hpp"

namespace tvx {

enum class GapStatus { Converged, Stalled, Budget };
const char* to_string(GapStatus s);

struct GapTrace {
  Vec x0;
  double M = 0.0, eta = 0.0, delta = 0.0, tol = 0.0;
  // Iterates k = 0..K; steps[k] and tbar[k] describe the move into iterate k
  // (steps[0] = tbar[0] = 0).
  std::vector<Vec> xA;
  std::vector<Vec> xB;
  std::vector<double> steps;
  std::vector<double> tbar;
  std::vector<double> gaps;
  std::vector<Vec> wA;
  std::vector<Vec> wB;
  std::optional<Vec> xAB;
  GapStatus status = GapStatus::Budget;
  bool start_condition_ok = true;  // max{|xA-x0|,|xB-x0|} + (M/eta) gap <= delta
  double bound = 0.0;              // (M/eta) gap_1 + M tol / eta
  double distA = 0.0;              // |xAB - xA_1|
  double distB = 0.0;
  std::vector<std::string> violations;

  double gap1() const { return gaps.front(); }
  bool invariants_ok() const { return violations.empty(); }
  /// Columns k, t_k, gap_k, tbar_k, drift_k.
  std::string to_csv() const;
};

struct GapOptions {
  int max_iters = 20000;
  StepOracleOptions oracle;
};

/// Runs the step oracle until the gap drops below tol, reconciles the final
/// pair (midpoint -> P_A -> P_B) and checks the trace invariants: gap
/// decrease per step, cumulative time, drift between any two iterates,
/// distance to x0, and the terminal bound.
GapTrace gap_reduction_solve(const SetSpec& A, const SetSpec& B, const Vec& x0, const Vec& xA, const Vec& xB,
                             double M, double eta, double delta, double tol, const GapOptions& opt = {});

/// Re-derives every invariant from the recorded iterates.
std::vector<std::string> check_trace(const GapTrace& trace);

/// delta / (1 + 2M/eta), exact.
mpq_class admissible_radius(double M, double eta, double delta);

struct NonseparationResult {
  std::vector<Vec> points;  // in A∩B, distinct from x0
  std::vector<double> t;
  std::vector<double> bound;  // 2 t_m |v_m^A|
  double epsilon = 0.0;
};

/// Points of A∩B approaching x0 along directions vA (Bouligand cone of A) and
/// vB (derivable cone of B) with |vA - vB| < 1/K.
NonseparationResult nonseparation_sequence(const SetSpec& A, const SetSpec& B, const Vec& x0, const Vec& vA,
                                           const Vec& vB, double K, int count, double t0 = 0.25);
/// Takes K from a subtransversality certificate; refuses non-certified ones.
NonseparationResult nonseparation_sequence(const SetSpec& A, const SetSpec& B, const Vec& x0, const Vec& vA,
                                           const Vec& vB, const TransversalityCertificate& sub, int count,
                                           double t0 = 0.25);

struct ProductVector {
  Vec x;
  double r = 0.0;
  Vec joined() const;
  double norm() const;  // max{|x|, |r|}
};

struct ProductUnitPair {
  ProductVector w1;
  ProductVector w2;
  double distance = 0.0;  // max-product norm of w1 - w2
  double approximation = 0.0;  // max-norm error of v1 - v2 against (0, -1)
};

/// Unit vectors w1 ∈ C1 and w2 ∈ C2base × (-inf, 0] with |w1 - w2| < epsilon
/// under the max-product norm, built from an LP approximation of (0, -1) by
/// the cone difference.
ProductUnitPair product_unit_vectors(const PolyCone& C1, const PolyCone& C2base, double epsilon);

struct MetricFormReport {
  double zeta = 0.0;
  int samples = 0;
  int holds = 0;
  int no_step = 0;
  double fraction() const { return samples ? static_cast<double>(holds) / samples : 0.0; }
};

/// dist(B_s(xA)∩A, B_s(xB)∩B) <= |xA - xB| - s zeta with zeta = eta/M and
/// s = M t, using the oracle's step points as the witnesses.
MetricFormReport check_metric_form(const SetSpec& A, const SetSpec& B, const Vec& x0, double M, double eta,
                                   double delta, int samples, std::uint64_t seed = 0x3e7);
MetricFormReport check_metric_form(const SetSpec& A, const SetSpec& B, double M, double eta, double delta,
                                   const std::vector<PointPair>& pairs);

}  // namespace tvx
