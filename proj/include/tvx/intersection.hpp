#pragma once

// Tangential intersection property: tangent cones of A, B and A∩B at a common
// point, compared exactly for convex instances and on a direction net
// otherwise.

#include <optional>
#include <string>
#include <vector>

#include "tvx/cones.hpp"
#include "tvx/transversality.hpp"

namespace tvx {

enum class Verdict { Verified, ConsistentCounterexample, Discrepancy, HypothesisUnmet };
const char* to_string(Verdict v);

struct ClaimCheck {
  std::string claim;
  bool holds = true;
  std::vector<Vec> counterexamples;
  int undecided = 0;  // sampled path only
};

struct DirectionRow {
  Vec direction;
  Membership tA = Membership::Undecided;
  Membership gA = Membership::Undecided;
  Membership tB = Membership::Undecided;
  Membership gB = Membership::Undecided;
  Membership tAB = Membership::Undecided;
  Membership gAB = Membership::Undecided;
};

struct IntersectionReport {
  Vec point;
  bool exact = false;
  bool clarke = false;
  std::optional<PolyCone> TA, TB, TAB;
  std::vector<ClaimCheck> claims;
  bool monotone_ok = true;  // T_{A∩B} ⊂ T_A and ⊂ T_B
  std::string hypothesis;   // status of the supplied subtransversality certificate
  Verdict verdict = Verdict::HypothesisUnmet;
  std::vector<DirectionRow> table;
  double confidence = 1.0;  // fraction of decided directions on the sampled path

  bool all_hold() const;
  /// direction, tA, gA, tB, gB, tAB, gAB
  std::string table_csv() const;
};

struct IntersectionOptions {
  int budget = 0;  // directions above R^3 (0: 200 * dim)
  SampledConeOptions cone;
};

/// T_A ∩ G_B ⊂ T_{A∩B} and G_A ∩ G_B = G_{A∩B}. `sub` may be null, in which
/// case the cones are still computed but the verdict is HypothesisUnmet.
IntersectionReport check_bouligand_derivable(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                             const TransversalityCertificate* sub,
                                             const IntersectionOptions& opt = {});

/// T̂_A ∩ T̂_B ⊂ T̂_{A∩B} with exact Clarke cones; Error(Unsupported) for sets
/// without an exact Clarke cone.
IntersectionReport check_clarke(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                const TransversalityCertificate* sub);

/// Fixed direction net: 720 directions in R^2, 2000 on the sphere in R^3.
std::vector<Vec> intersection_net(int dim, int budget = 0);

}  // namespace tvx
