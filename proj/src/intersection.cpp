#include "tvx/intersection.hpp"

#include <sstream>

#include "tvx/error.hpp"
#include "tvx/sampling.hpp"

namespace tvx {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "VERIFIED";
    case Verdict::ConsistentCounterexample: return "CONSISTENT_COUNTEREXAMPLE";
    case Verdict::Discrepancy: return "DISCREPANCY";
    case Verdict::HypothesisUnmet: return "HYPOTHESIS_UNMET";
  }
  return "?";
}

bool IntersectionReport::all_hold() const {
  for (const auto& c : claims)
    if (!c.holds) return false;
  return true;
}

std::string IntersectionReport::table_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "direction,tA,gA,tB,gB,tAB,gAB\n";
  for (const auto& r : table) {
    for (Eigen::Index i = 0; i < r.direction.size(); ++i) os << (i ? " " : "") << r.direction[i];
    os << ',' << to_string(r.tA) << ',' << to_string(r.gA) << ',' << to_string(r.tB) << ',' << to_string(r.gB)
       << ',' << to_string(r.tAB) << ',' << to_string(r.gAB) << '\n';
  }
  return os.str();
}

std::vector<Vec> intersection_net(int dim, int budget) {
  if (dim == 1) return {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  if (dim == 2) return circle_net(720);
  if (dim == 3) return fibonacci_sphere(2000);
  return direction_net(dim, budget > 0 ? budget : 200 * dim);
}

namespace {

std::string hypothesis_of(const TransversalityCertificate* sub) {
  if (!sub) return "no certificate supplied";
  if (sub->notion != Notion::Subtransversal) return "certificate is not a subtransversality certificate";
  return std::string("subtransversality ") + to_string(sub->status);
}

bool hypothesis_met(const TransversalityCertificate* sub) {
  return sub && sub->notion == Notion::Subtransversal && sub->certified();
}

void settle(IntersectionReport& rep, const TransversalityCertificate* sub) {
  rep.hypothesis = hypothesis_of(sub);
  if (!sub) {
    rep.verdict = Verdict::HypothesisUnmet;
  } else if (rep.all_hold()) {
    rep.verdict = Verdict::Verified;
  } else {
    rep.verdict = hypothesis_met(sub) ? Verdict::Discrepancy : Verdict::ConsistentCounterexample;
  }
}

void check_members(const SetSpec& A, const SetSpec& B, const Vec& x0) {
  if (A.dim() != B.dim()) throw Error(ErrorKind::DimensionMismatch, "intersection check: set dimensions differ");
  require_dim(x0, A.dim(), "x0");
  if (!member(A, x0) || !member(B, x0)) throw Error(ErrorKind::Precondition, "intersection check: x0 is not in A∩B");
}

// Unit vectors of a cone's generators that fail membership in `target`.
ClaimCheck inclusion(const std::string& name, const PolyCone& lhs, const PolyCone& target) {
  ClaimCheck c;
  c.claim = name;
  c.holds = lhs.subset_of(target);
  if (!c.holds) {
    for (const auto& g : lhs.generators())
      if (!target.contains(g)) c.counterexamples.push_back(g);
  }
  return c;
}

std::optional<IntersectionReport> exact_report(const SetSpec& A, const SetSpec& B, const Vec& x0, bool clarke) {
  if (!A.convex_exact() || !B.convex_exact()) return std::nullopt;
  std::optional<SetSpec> AB;
  try {
    AB = intersect(A, B);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Unsupported) throw;
    return std::nullopt;
  }
  IntersectionReport rep;
  rep.point = x0;
  rep.exact = true;
  rep.clarke = clarke;
  // For convex sets the Bouligand, derivable and Clarke cones coincide.
  rep.TA = clarke_cone_convex(A, x0);
  rep.TB = clarke_cone_convex(B, x0);
  rep.TAB = clarke_cone_convex(*AB, x0);
  const PolyCone meet = cone_intersect(*rep.TA, *rep.TB);
  if (clarke) {
    rep.claims.push_back(inclusion("clarke(A) ∩ clarke(B) ⊂ clarke(A∩B)", meet, *rep.TAB));
  } else {
    rep.claims.push_back(inclusion("T_A ∩ G_B ⊂ T_(A∩B)", meet, *rep.TAB));
    ClaimCheck eq = inclusion("G_A ∩ G_B = G_(A∩B)", meet, *rep.TAB);
    eq.holds = eq.holds && rep.TAB->subset_of(meet);
    rep.claims.push_back(eq);
  }
  rep.monotone_ok = rep.TAB->subset_of(*rep.TA) && rep.TAB->subset_of(*rep.TB);
  return rep;
}

IntersectionReport sampled_report(const SetSpec& A, const SetSpec& B, const Vec& x0, const IntersectionOptions& opt) {
  const IntersectionOracle inter(A, B);
  const auto distAB = [&inter](const Vec& x) { return inter.distance(x).value; };
  IntersectionReport rep;
  rep.point = x0;
  ClaimCheck c1{"T_A ∩ G_B ⊂ T_(A∩B)", true, {}, 0};
  ClaimCheck c2{"G_A ∩ G_B = G_(A∩B)", true, {}, 0};
  int decided = 0;
  const auto net = intersection_net(A.dim(), opt.budget);
  for (const auto& v : net) {
    const auto pA = classify_direction(A, x0, v, opt.cone);
    const auto pB = classify_direction(B, x0, v, opt.cone);
    const auto pAB = classify_direction(distAB, x0, v, opt.cone);
    DirectionRow row{v, pA.bouligand, pA.derivable, pB.bouligand, pB.derivable, pAB.bouligand, pAB.derivable};
    bool undecided = false;
    if (row.tA == Membership::In && row.gB == Membership::In) {
      if (row.tAB == Membership::Out) {
        c1.holds = false;
        c1.counterexamples.push_back(v);
      } else if (row.tAB == Membership::Undecided) {
        ++c1.undecided;
        undecided = true;
      }
    }
    if (row.gA == Membership::In && row.gB == Membership::In) {
      if (row.gAB == Membership::Out) {
        c2.holds = false;
        c2.counterexamples.push_back(v);
      } else if (row.gAB == Membership::Undecided) {
        ++c2.undecided;
        undecided = true;
      }
    }
    if (row.gAB == Membership::In && (row.gA == Membership::Out || row.gB == Membership::Out)) {
      c2.holds = false;
      c2.counterexamples.push_back(v);
    }
    if (row.tAB == Membership::In && (row.tA == Membership::Out || row.tB == Membership::Out)) rep.monotone_ok = false;
    if (!undecided) ++decided;
    rep.table.push_back(row);
  }
  rep.confidence = net.empty() ? 0.0 : static_cast<double>(decided) / static_cast<double>(net.size());
  rep.claims = {c1, c2};
  return rep;
}

}  // namespace

IntersectionReport check_bouligand_derivable(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                             const TransversalityCertificate* sub, const IntersectionOptions& opt) {
  check_members(A, B, x0);
  auto rep = exact_report(A, B, x0, false);
  if (!rep) rep = sampled_report(A, B, x0, opt);
  settle(*rep, sub);
  return *rep;
}

IntersectionReport check_clarke(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                const TransversalityCertificate* sub) {
  check_members(A, B, x0);
  auto rep = exact_report(A, B, x0, true);
  if (!rep) throw Error(ErrorKind::Unsupported, "check_clarke: no exact Clarke cone for these sets");
  settle(*rep, sub);
  return *rep;
}

}  // namespace tvx
