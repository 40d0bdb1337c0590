// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "tvx/gapreduce.hpp"
#include "tvx/intersection.hpp"
#include "tvx/lagrange.hpp"
#include "tvx/scenario.hpp"

using namespace tvx;
using oracle::v2;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. transfers against independently written rational formulas

Outcome c1_transfers() {
  int checked = 0, bad = 0;
  const std::vector<double> alphas{0.5, 0.25, 0.1, 0.3, 0.75, 1.0 / 3.0};
  const std::vector<double> deltas{1.0, 0.25, 0.1, 2.0};
  for (double a : alphas) {
    for (double d : deltas) {
      const mpq_class qa(a), qd(d);
      const auto t = transfer_constants_transversal_to_tangential(a, d);
      bad += !(t.M == qa + 1 && t.eta == qa && t.delta == qd);
      const double M = mpq_class(qa + 1).get_d(), eta = a;
      const mpq_class qM(M), qe(eta);
      const auto s = transfer_constants_tangential_to_sub(M, eta, d);
      const mpq_class K = 1 + qM / qe;
      const mpq_class zeta = qd / (2 * (1 + 2 * qM / qe));
      bad += !(s.K == K && s.zeta == zeta);
      bad += !(admissible_radius(M, eta, d) == mpq_class(qd / (1 + 2 * qM / qe)));
      checked += 3;
    }
  }
  // closed forms with small denominators
  bad += !(transfer_constants_tangential_to_sub(1.0, 2.0, 1.0).zeta == mpq_class(1, 4));
  bad += !(transfer_constants_tangential_to_sub(3.0, 1.0, 1.0).K == mpq_class(4));
  bad += !(admissible_radius(2.0, 1.0, 5.0) == mpq_class(1));
  checked += 3;
  return {bad == 0, std::to_string(checked) + " exact comparisons, " + std::to_string(bad) + " mismatches"};
}

// ---------------------------------------------------------------------------
// 2. implication chain on generated polyhedral pairs

SetSpec random_cone_set(std::mt19937_64& rng, int dim, int rows) {
  return SetSpec::polyhedron(oracle::random_normals(rng, rows, dim), Vec::Zero(rows));
}

Outcome c2_chain() {
  std::mt19937_64 rng(2024);
  int certified = 0, ok = 0, tried = 0;
  double worst = 0.0;
  while (certified < 24 && tried < 200) {
    ++tried;
    const int dim = tried % 2 ? 2 : 3;
    const auto A = random_cone_set(rng, dim, 1 + static_cast<int>(rng() % 2));
    const auto B = random_cone_set(rng, dim, 1 + static_cast<int>(rng() % 2));
    const Vec x0 = Vec::Zero(dim);
    // exact transversality of the tangent cones screens the pair before sampling
    if (!is_dense_difference(tangent_cone_polyhedral(A, x0), tangent_cone_polyhedral(B, x0)).dense) continue;
    SamplingOptions so;
    so.seed = 100 + tried;
    so.pairs = 10;
    so.directions = 8;
    const auto r = implication_chain(A, B, x0, 0.1, 0.5, so);
    if (!r.kruger.certified()) continue;
    ++certified;
    worst = std::max(worst, r.max_ratio / r.sub.K.get_d());
    ok += r.tangential_valid && r.sub_bounded;
  }
  return {certified >= 20 && ok == certified,
          std::to_string(ok) + "/" + std::to_string(certified) + " certified pairs validate; max ratio/K " +
              fmt("%.3f", worst)};
}

// ---------------------------------------------------------------------------
// 3. gap reduction

bool solver_ok(const SetSpec& A, const SetSpec& B, const Vec& x0, const Vec& xA, const Vec& xB, double M,
               double eta, double delta, double tol, std::string& why) {
  const auto tr = gap_reduction_solve(A, B, x0, xA, xB, M, eta, delta, tol);
  if (tr.status != GapStatus::Converged || !tr.xAB) {
    why = to_string(tr.status);
    return false;
  }
  const double bound = (M / eta) * (xA - xB).norm() + M * tol / eta;
  const double drift = (*tr.xAB - xA).norm();
  if (drift > bound * (1 + 1e-12)) {
    why = "terminal bound";
    return false;
  }
  if (distance(A, *tr.xAB) > tol || distance(B, *tr.xAB) > tol) {
    why = "xAB outside A or B";
    return false;
  }
  if (!tr.invariants_ok() || !check_trace(tr).empty()) {
    why = "trace invariant";
    return false;
  }
  return true;
}

Outcome c3_solver() {
  std::string why;
  int ok = 0;
  const auto lower = SetSpec::halfspace(v2(0, 1), 0.0);
  const auto upper = SetSpec::halfspace(v2(0, -1), 0.0);
  ok += solver_ok(lower, upper, Vec::Zero(2), v2(0, -1), v2(0, 1), 1.0, 2.0, 4.0, 1e-8, why);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> ang(0.2, oracle::kPi - 0.2), r(-0.05, 0.05);
  for (int k = 0; k < 10; ++k) {
    const double th = ang(rng);
    const Vec u = oracle::unit_angle(th);
    const auto A = SetSpec::line(Vec::Zero(2), v2(1, 0));
    const auto B = SetSpec::line(Vec::Zero(2), u);
    const double s = std::sin(th);
    ok += solver_ok(A, B, Vec::Zero(2), v2(r(rng), 0), r(rng) * u, 1.0 + 1.0 / s, 0.5 * s, 1.0, 1e-8, why);
  }
  return {ok == 11, std::to_string(ok) + "/11 instances converge within the bound" + (why.empty() ? "" : "; " + why)};
}

// ---------------------------------------------------------------------------
// 4. subtransversality estimate against a 100 x 100 grid

Outcome c4_estimator() {
  std::string detail;
  bool pass = true;
  for (double deg : {15.0, 45.0, 90.0}) {
    const double th = deg * oracle::kPi / 180.0;
    const auto c = estimate_subtransversality_constant(SetSpec::line(Vec::Zero(2), v2(1, 0)),
                                                       SetSpec::line(Vec::Zero(2), oracle::unit_angle(th)),
                                                       Vec::Zero(2), 0.5);
    const double K = c.constants.at("K");
    const double bf = oracle::brute_force_line_K(th, 100);
    const double rel = std::abs(K - bf) / bf;
    pass = pass && c.certified() && rel <= 0.10;
    detail += fmt("%g deg: ", deg) + fmt("K=%.4f ", K) + fmt("grid=%.4f", bf) + fmt(" (%.1f%%); ", 100 * rel);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5. tangent disks

Outcome c5_negative() {
  const auto A = SetSpec::ball(v2(-1, 0), 1.0);
  const auto B = SetSpec::ball(v2(1, 0), 1.0);
  const Vec x0 = Vec::Zero(2);
  const auto sub = estimate_subtransversality_constant(A, B, x0, 0.5);
  const auto tan = estimate_tangential_constants(A, B, x0);
  const auto bd = check_bouligand_derivable(A, B, x0, &sub);
  const auto cl = check_clarke(A, B, x0, &sub);
  const bool pass = sub.refuted() && tan.status == CertStatus::Inconclusive &&
                    bd.verdict == Verdict::ConsistentCounterexample && cl.verdict == Verdict::ConsistentCounterexample;
  return {pass, std::string("sub ") + to_string(sub.status) + ", tangential " + to_string(tan.status) +
                    ", bouligand/derivable " + to_string(bd.verdict) + ", clarke " + to_string(cl.verdict)};
}

// ---------------------------------------------------------------------------
// 6. exact intersection inclusions

Outcome c6_intersection() {
  std::mt19937_64 rng(606);
  int pairs = 0, discrepancies = 0, equal_g = 0, verified = 0;
  while (pairs < 32) {
    const int dim = pairs % 2 ? 2 : 3;
    const auto A = random_cone_set(rng, dim, 1 + static_cast<int>(rng() % 3));
    const auto B = random_cone_set(rng, dim, 1 + static_cast<int>(rng() % 3));
    const Vec x0 = Vec::Zero(dim);
    SubtransversalityOptions so;
    so.sampling.seed = 7 + pairs;
    const auto sub = estimate_subtransversality_constant(A, B, x0, 0.5, so);
    if (!sub.certified()) continue;
    ++pairs;
    const auto r = check_bouligand_derivable(A, B, x0, &sub);
    discrepancies += r.verdict == Verdict::Discrepancy || !r.monotone_ok;
    verified += r.verdict == Verdict::Verified;
    // derivable = Bouligand on convex polyhedra, so G_A ∩ G_B against G_{A∩B} is a cone identity
    if (r.exact && r.TA && r.TB && r.TAB && cone_intersect(*r.TA, *r.TB) == *r.TAB) ++equal_g;
  }
  return {discrepancies == 0 && equal_g == pairs && verified == pairs,
          std::to_string(pairs) + " pairs, " + std::to_string(verified) + " verified, " +
              std::to_string(discrepancies) + " discrepancies, G equality on " + std::to_string(equal_g)};
}

// ---------------------------------------------------------------------------
// 7. product-space unit vectors

Outcome c7_product() {
  std::mt19937_64 rng(77);
  int pairs = 0, ok = 0, tried = 0;
  double worst_norm = 0.0, worst_ratio = 0.0;
  while (pairs < 50 && tried < 2000) {
    ++tried;
    const int n = 1 + static_cast<int>(rng() % 2);
    std::vector<Vec> g1;
    for (int k = 0; k < 2 + static_cast<int>(rng() % 3); ++k) g1.push_back(oracle::random_unit(rng, n + 1));
    std::vector<Vec> g2;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 2); ++k) g2.push_back(oracle::random_unit(rng, n));
    const auto C1 = PolyCone::from_generators(n + 1, g1);
    const auto C2 = PolyCone::from_generators(n, g2);
    const auto lifted = cone_product(C2, nonpositive_halfline());
    if (!is_dense_difference(C1, lifted).dense) continue;
    ++pairs;
    bool good = true;
    for (double eps : {0.5, 0.1, 0.02}) {
      const auto p = product_unit_vectors(C1, C2, eps);
      const double n1 = std::max(p.w1.x.norm(), std::abs(p.w1.r));
      const double n2 = std::max(p.w2.x.norm(), std::abs(p.w2.r));
      const double d = std::max((p.w1.x - p.w2.x).norm(), std::abs(p.w1.r - p.w2.r));
      worst_norm = std::max({worst_norm, std::abs(n1 - 1.0), std::abs(n2 - 1.0)});
      worst_ratio = std::max(worst_ratio, d / eps);
      good = good && std::abs(n1 - 1.0) <= 1e-12 && std::abs(n2 - 1.0) <= 1e-12 && d < eps &&
             C1.contains(p.w1.joined(), 1e-9) && lifted.contains(p.w2.joined(), 1e-9);
    }
    ok += good;
  }
  return {pairs == 50 && ok == 50, std::to_string(ok) + "/" + std::to_string(pairs) + " dense pairs; max |norm-1| " +
                                       fmt("%.1e", worst_norm) + ", max dist/eps " + fmt("%.3f", worst_ratio)};
}

// ---------------------------------------------------------------------------
// 8. multiplier rule on LPs, against vertex enumeration and active-set duals

struct Poly2 {
  Mat A;
  Vec b;
};

Poly2 random_polygon(std::mt19937_64& rng) {
  const int cuts = 2 + static_cast<int>(rng() % 3);
  Poly2 P{Mat(4 + cuts, 2), Vec(4 + cuts)};
  P.A.topRows(4) << 1, 0, -1, 0, 0, 1, 0, -1;
  P.b.head(4).setOnes();
  const Mat N = oracle::random_normals(rng, cuts, 2);
  for (int i = 0; i < cuts; ++i) {
    P.A.row(4 + i) = N.row(i);
    P.b[4 + i] = 0.6;
  }
  return P;
}

// Minimizer of c.x by enumerating every vertex of the polygon.
std::optional<Vec> vertex_minimizer(const Poly2& P, const Vec& c) {
  std::optional<Vec> best;
  double bv = kInf;
  for (Eigen::Index i = 0; i < P.A.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < P.A.rows(); ++j) {
      Mat M(2, 2);
      M << P.A.row(i), P.A.row(j);
      if (std::abs(M.determinant()) < 1e-9) continue;
      const Vec x = M.partialPivLu().solve(v2(P.b[i], P.b[j]));
      if (((P.A * x - P.b).array() > 1e-9).any()) continue;
      if (c.dot(x) < bv - 1e-12) {
        bv = c.dot(x);
        best = x;
      }
    }
  }
  return best;
}

Outcome c8_multipliers() {
  std::mt19937_64 rng(88);
  int lp_ok = 0, lp = 0;
  while (lp < 10) {
    const Poly2 P = random_polygon(rng);
    const Vec c = oracle::random_unit(rng, 2);
    const auto x0 = vertex_minimizer(P, c);
    if (!x0) continue;
    ++lp;
    const auto S = SetSpec::polyhedron(P.A, P.b);
    const auto prob = OptProblem::make(PolyFunction::affine(c, 0.0), S, *x0);
    const auto Cepi = clarke_cone_convex(prob.epi, prob.base());
    const auto CS = clarke_cone_convex(S, *x0);
    const auto out = multiplier_rule(prob, Cepi, CS);
    if (!out.has_multiplier() || !out.checks.all() || out.pair->eta != 1.0) continue;
    // KKT: -c = sum of lambda_i a_i over active rows, lambda >= 0 (nonnegative least squares by LP)
    std::vector<int> act;
    for (Eigen::Index i = 0; i < P.A.rows(); ++i)
      if (std::abs(P.A.row(i).dot(*x0) - P.b[i]) < 1e-9) act.push_back(static_cast<int>(i));
    LpProblem nn;
    nn.c = Vec::Zero(static_cast<Eigen::Index>(act.size()));
    nn.A_eq = Mat(2, act.size());
    for (std::size_t k = 0; k < act.size(); ++k) nn.A_eq.col(k) = P.A.row(act[k]).transpose();
    nn.b_eq = -c;
    nn.lower = Vec::Zero(static_cast<Eigen::Index>(act.size()));
    const auto lam = lp_solve(nn);
    if (!lam.optimal()) continue;
    const Vec kkt = nn.A_eq * lam.x;  // = -c
    // xi must be a positive multiple of the KKT normal
    const double scale = out.pair->xi.dot(kkt) / kkt.squaredNorm();
    const auto res = kkt_residual(c, S, *x0, *out.pair);
    if (scale > 0 && (out.pair->xi - scale * kkt).norm() <= 1e-8 && res && *res <= 1e-8) ++lp_ok;
  }
  // non-minimizers: the dense branch must fire with a verifiable descent direction
  int dense_ok = 0;
  const std::vector<std::pair<Vec, Vec>> bad{{v2(1, 1), v2(-1, -1)}, {v2(-1, 0.5), v2(-1, 0)}, {v2(0, -1), v2(0.3, 0.2)}};
  Mat A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  const auto box = SetSpec::polyhedron(A, Vec::Ones(4));
  for (const auto& [c, x0] : bad) {
    const auto out = multiplier_rule_massive(OptProblem::make(PolyFunction::affine(-c, 0.0), box, x0));
    if (out.has_multiplier() || !out.dense || !out.dense->descent) continue;
    const Vec d = *out.dense->descent;
    const Vec v = d.head(2);
    const double s = d[2];
    const bool feasible = oracle::polyhedral_tangent_contains(A, Vec::Ones(4), x0, v);
    if (feasible && s < 0 && (-c).dot(v) <= s + 1e-9) ++dense_ok;
  }
  return {lp_ok == 10 && dense_ok == 3,
          std::to_string(lp_ok) + "/10 LP multipliers match KKT, " + std::to_string(dense_ok) + "/3 dense verdicts"};
}

// ---------------------------------------------------------------------------
// 9. qualification equivalences

Outcome c9_qualification() {
  const auto ind = [](double a, double b) {
    Mat A(1, 1);
    A << a;
    return PolyFunction::indicator(A, Vec::Constant(1, b));
  };
  const auto ind2 = [](Mat A) { return PolyFunction::indicator(A, Vec::Zero(A.rows())); };
  const Vec z1 = Vec::Zero(1), z2 = Vec::Zero(2);
  Mat qA(2, 2), qB(2, 2), half(1, 2), half_neg(1, 2), line(2, 2);
  qA << -1, 0, 0, -1;  // nonnegative quadrant
  qB << 1, 0, 0, 1;    // nonpositive quadrant
  half << 0, 1;
  half_neg << 0, -1;
  line << 1, -1, -1, 1;  // the diagonal
  Mat sl(2, 2);
  sl << 1, 0, -1, 0;
  struct Case {
    PolyFunction f1, f2;
    Vec x0;
  };
  const std::vector<Case> cases{
      {PolyFunction::l1_norm(1), PolyFunction::l1_norm(1), z1},
      {PolyFunction::l1_norm(1), ind(-1, 0), z1},
      {ind(-1, 0), ind(1, 0), z1},
      {ind(-1, 0), ind(-1, 0), z1},
      {PolyFunction::affine(Vec::Constant(1, 2.0), 1.0), ind(1, 0), z1},
      {PolyFunction::l1_norm(2), PolyFunction::l1_norm(2), z2},
      {ind2(qA), ind2(qB), z2},
      {ind2(qA), ind2(qA), z2},
      {ind2(half), ind2(half_neg), z2},
      {ind2(half), ind2(line), z2},
      {PolyFunction::max_affine(sl, Vec::Zero(2)), ind2(half), z2},
      {ind2(line), ind2(line), z2},
  };
  int agree = 0, qualified = 0;
  for (const auto& k : cases) {
    const auto r = qualification_equivalences(SetSpec::epigraph(k.f1), SetSpec::epigraph(k.f2), k.x0);
    agree += r.agree();
    qualified += r.agree() && r.singular;
  }
  const int n = static_cast<int>(cases.size());
  return {agree == n && qualified > 0 && qualified < n,
          std::to_string(agree) + "/" + std::to_string(n) + " agree (" + std::to_string(qualified) + " qualified, " +
              std::to_string(n - qualified) + " not)"};
}

// ---------------------------------------------------------------------------
// 10. Hilbert cube

Outcome c10_hilbert() {
  const auto rows = hilbert_cube_scaling(8);
  std::string detail;
  bool inc = true;
  double prev = -1.0;
  for (int n : {2, 4, 6, 8}) {
    const double K = rows[n - 1].K;
    inc = inc && K > prev;
    prev = K;
    detail += "K_" + std::to_string(n) + fmt("=%.3f ", K);
  }
  return {inc, detail};
}

// ---------------------------------------------------------------------------
// 11. byte-identical corpus reports

std::map<std::string, std::string> slurp_dir(const fs::path& d) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(d)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

Outcome c11_determinism() {
  const fs::path base = fs::temp_directory_path() / "tvx_acceptance";
  fs::remove_all(base);
  const auto s1 = run_corpus(TVX_CORPUS_DIR, base / "a", {}, 1);
  const auto s2 = run_corpus(TVX_CORPUS_DIR, base / "b", {}, 3);
  const auto a = slurp_dir(base / "a");
  const auto b = slurp_dir(base / "b");
  fs::remove_all(base);
  return {!a.empty() && a == b && s1.table() == s2.table() && s1.discrepancies == 0,
          std::to_string(a.size()) + " files, identical=" + (a == b ? "yes" : "no") +
              ", discrepancies " + std::to_string(s1.discrepancies)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "constant transfers", 1.0, c1_transfers},
      {2, "implication chain", 60.0, c2_chain},
      {3, "gap-reduction solver", 10.0, c3_solver},
      {4, "subtransversality vs brute force", 30.0, c4_estimator},
      {5, "tangent-disk negative control", 30.0, c5_negative},
      {6, "exact intersection inclusions", 60.0, c6_intersection},
      {7, "product unit vectors", 30.0, c7_product},
      {8, "multiplier rule", 30.0, c8_multipliers},
      {9, "qualification equivalences", 30.0, c9_qualification},
      {10, "Hilbert-cube scaling", 120.0, c10_hilbert},
      {11, "deterministic reports", 120.0, c11_determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && dt <= c.limit_s;
    failed += !pass;
    std::printf("%s [%2d] %-34s %7.2fs (limit %gs)  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, dt, c.limit_s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed ? 1 : 0;
}
