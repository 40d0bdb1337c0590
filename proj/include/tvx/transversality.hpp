#pragma once

// Certifiers and estimators for transversality, tangential transversality and
// subtransversality of two closed sets, plus the constant transfers between
// the three notions.

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tvx/cones.hpp"
#include "tvx/sampling.hpp"
#include "tvx/sets.hpp"

namespace tvx {

enum class Notion { Transversal, TangentiallyTransversal, Subtransversal, CoveringSufficient, MassiveDense };
enum class CertStatus { Certified, Refuted, Inconclusive };

const char* to_string(Notion n);
const char* to_string(CertStatus s);

struct Witness {
  std::string label;
  std::vector<Vec> vectors;
  double value = 0.0;
};

struct TransversalityCertificate {
  Notion notion = Notion::Transversal;
  Vec point;
  CertStatus status = CertStatus::Inconclusive;
  std::map<std::string, double> constants;
  std::map<std::string, std::string> formulas;
  bool exact = false;  // false: empirical (sampled)
  std::vector<Witness> witnesses;
  std::vector<double> per_sample;
  std::string rationale;

  bool certified() const { return status == CertStatus::Certified; }
  bool refuted() const { return status == CertStatus::Refuted; }
};

struct SamplingOptions {
  std::uint64_t seed = 0x7e5eed;
  int pairs = 24;       // sampled (xA, xB) pairs
  int directions = 16;  // direction-net size for adversarial perturbations
  int shell_directions = 48;
};

struct PointPair {
  Vec xA;
  Vec xB;
};

/// Pairs xA in A, xB in B within distance delta of x0: mirror pairs
/// (P_A(z), P_B(z)), nearest-point pairs (P_A(z), P_B(P_A(z))) and independent
/// projections, z drawn with log-uniform radii.
std::vector<PointPair> sample_pairs(const SetSpec& A, const SetSpec& B, const Vec& x0, double delta, int count,
                                    std::uint64_t seed);

/// Dykstra's alternating projections onto the intersection of convex sets,
/// started at x; converges to the projection of x onto the intersection.
Vec dykstra(const std::vector<SetSpec>& sets, const Vec& x, int iters = 2000, double tol = 1e-13);

struct IntersectionDistance {
  double value = 0.0;
  bool approximate = false;
};

/// Distance to A∩B via the exact intersection when available (symmetrized
/// over operand order), otherwise Dykstra iterations on convex sets.
class IntersectionOracle {
 public:
  IntersectionOracle(const SetSpec& A, const SetSpec& B);
  IntersectionDistance distance(const Vec& x) const;
  Vec project(const Vec& x) const;
  bool exact() const { return forward_.has_value(); }

 private:
  std::vector<SetSpec> sets_;
  std::optional<SetSpec> forward_;
  std::optional<SetSpec> backward_;
};

// ---------------------------------------------------------------------------
// Transversality (Kruger's criterion)

struct KrugerOptions {
  SamplingOptions sampling;
  std::vector<double> rho_fractions{0.9, 0.5, 0.1, 0.01};
  bool sampled_fallback = false;
};

/// Checks (A - xA - rho w1) ∩ (B - xB - rho w2) ∩ rho B̄ ≠ ∅ over sampled
/// rho, w1, w2 in alpha B̄ and pairs in the delta-balls.
TransversalityCertificate certify_transversality_kruger(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                        double alpha, double delta, const KrugerOptions& opt = {});

// ---------------------------------------------------------------------------
// Tangential transversality

struct StepPair {
  double t = 0.0;
  Vec wA;
  Vec wB;
  double gap_before = 0.0;
  double gap_after = 0.0;
  double decrease() const { return gap_before - gap_after; }
};

struct StepOracleOptions {
  double t_floor = 1e-8;
  std::uint64_t seed = 0x57e9;
  int random_candidates = 4;
};

/// Independent re-check of the step-pair invariants.
bool verify_step(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB, double M, double eta,
                 const StepPair& s, double tol = 1e-9);

/// Best step at a single t, or nullopt when no candidate reaches rate eta.
std::optional<StepPair> step_at(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB, double M,
                                double eta, double t, const StepOracleOptions& opt = {});

/// Searches tgrid in order and returns the first verified step.
std::optional<StepPair> tangential_step_oracle(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB,
                                               double M, double eta, const std::vector<double>& tgrid,
                                               const StepOracleOptions& opt = {});

/// t0 = min(delta, gap/eta) halved down to t_floor.
std::vector<double> step_grid(double delta, double gap, double eta, double t_floor = 1e-8);

/// The subsequence of step_grid used to validate one pair: indices 4, 8, 12, ...
/// (t0/16, t0/256, ...), i.e. a finite stand-in for t_m decreasing to 0.
std::vector<double> validation_grid(double delta, double gap, double eta, int terms = 4);

/// Best gap-decrease rate at each validation t; the pair's rate is the minimum.
double pair_rate(const SetSpec& A, const SetSpec& B, const PointPair& p, double M, double delta,
                 const StepOracleOptions& opt = {});

struct TangentialValidation {
  bool valid = true;
  int checked = 0;
  std::vector<PointPair> failures;
};

/// Every pair must admit verified steps at every validation t.
TangentialValidation validate_tangential_constants(const SetSpec& A, const SetSpec& B,
                                                   const std::vector<PointPair>& pairs, double M, double eta,
                                                   double delta, const StepOracleOptions& opt = {});

struct TangentialOptions {
  SamplingOptions sampling;
  double delta = 0.5;
  std::vector<double> M_schedule{1.0, 2.0, 4.0};
  double eta_floor = 1e-3;
};

TransversalityCertificate estimate_tangential_constants(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                        const TangentialOptions& opt = {});

// ---------------------------------------------------------------------------
// Subtransversality

struct SubtransversalityOptions {
  SamplingOptions sampling;
  int levels = 4;        // shells at delta * 4^-k
  double denom_floor = 1e-12;
};

/// The sample points of one shell level (deterministic, set-independent apart
/// from the projections onto A and B which are appended in a fixed order).
/// Projections farther than delta from x0 are dropped.
std::vector<Vec> shell_points(const SetSpec& A, const SetSpec& B, const Vec& x0, double radius, double delta,
                              const SubtransversalityOptions& opt);

TransversalityCertificate estimate_subtransversality_constant(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                              double delta, const SubtransversalityOptions& opt = {});

// ---------------------------------------------------------------------------
// Constant transfers, in exact rational arithmetic on the binary values of
// the inputs.

struct TangentialConstants {
  mpq_class M, eta, delta;
};
struct SubtransversalConstants {
  mpq_class K, zeta;
};

TangentialConstants transfer_constants_transversal_to_tangential(double alpha, double delta);
SubtransversalConstants transfer_constants_tangential_to_sub(double M, double eta, double delta);

// ---------------------------------------------------------------------------
// Sufficient conditions

struct CoveringOptions {
  SamplingOptions sampling;
  int net = 360;      // unit directions in R^2 (Fibonacci in R^3)
  int polygon = 64;   // inscribed polygon for M B̄ in R^2
};

TransversalityCertificate certify_covering(const SetSpec& A, const SetSpec& B, const Vec& x0, double delta,
                                         double alpha, double M, const CoveringOptions& opt = {});

TransversalityCertificate certify_massive_dense(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                const TangentialOptions& cross_check = {});

// ---------------------------------------------------------------------------

struct AltProjResult {
  std::vector<double> gaps;
  std::vector<Vec> iterates;
  std::optional<double> rate;
  bool start_in_intersection = false;
  bool sublinear = false;
  bool gap_from_intersection = true;
};

AltProjResult altproj_rate(const SetSpec& A, const SetSpec& B, const Vec& x_start, int iters);

}  // namespace tvx
