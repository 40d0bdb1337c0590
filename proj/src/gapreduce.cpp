#include "tvx/gapreduce.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tvx/error.hpp"

namespace tvx {

namespace {

Vec proj(const SetSpec& S, const Vec& x) {
  return S.exact_projection() ? project(S, x) : project_approx(S, x).point;
}

double slack(double scale) { return 1e-9 * (1.0 + scale); }

}  // namespace

const char* to_string(GapStatus s) {
  switch (s) {
    case GapStatus::Converged: return "CONVERGED";
    case GapStatus::Stalled: return "STALLED";
    case GapStatus::Budget: return "BUDGET";
  }
  return "?";
}

std::string GapTrace::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "k,t_k,gap_k,tbar_k,drift_k\n";
  for (size_t k = 0; k < gaps.size(); ++k) {
    const double drift = k == 0 ? 0.0 : std::max((xA[k] - xA[k - 1]).norm(), (xB[k] - xB[k - 1]).norm());
    os << k << ',' << steps[k] << ',' << gaps[k] << ',' << tbar[k] << ',' << drift << '\n';
  }
  return os.str();
}

std::vector<std::string> check_trace(const GapTrace& tr) {
  std::vector<std::string> bad;
  const auto flag = [&](const std::string& what, size_t k) {
    std::ostringstream os;
    os << what << " at k=" << k;
    bad.push_back(os.str());
  };
  const size_t K = tr.gaps.size();
  if (K == 0) return {"empty trace"};
  const double g1 = tr.gaps.front();
  const double dA = (tr.xA.front() - tr.x0).norm();
  const double dB = (tr.xB.front() - tr.x0).norm();
  for (size_t k = 1; k < K; ++k) {
    const double gap = (tr.xA[k] - tr.xB[k]).norm();
    if (std::abs(gap - tr.gaps[k]) > slack(g1)) flag("recorded gap differs from iterates", k);
    if (!(tr.gaps[k] < tr.gaps[k - 1])) flag("gap not strictly decreasing", k);
    if (tr.gaps[k] > tr.gaps[k - 1] - tr.steps[k] * tr.eta + slack(g1)) flag("per-step decrease below t*eta", k);
    if (tr.gaps[k] > g1 - tr.tbar[k] * tr.eta + slack(g1)) flag("gap above gap_1 - tbar*eta", k);
    if (tr.tbar[k] > g1 / tr.eta + slack(g1 / tr.eta)) flag("cumulative time above gap_1/eta", k);
    if (std::abs(tr.tbar[k] - tr.tbar[k - 1] - tr.steps[k]) > slack(tr.tbar[k])) flag("tbar is not the running sum", k);
    if ((tr.xA[k] - tr.x0).norm() > dA + tr.tbar[k] * tr.M + slack(g1)) flag("xA left the drift ball around x0", k);
    if ((tr.xB[k] - tr.x0).norm() > dB + tr.tbar[k] * tr.M + slack(g1)) flag("xB left the drift ball around x0", k);
  }
  // Pairwise drift; for long traces every l is compared against a strided
  // subset of earlier iterates.
  const size_t stride = K > 600 ? K / 300 : 1;
  for (size_t k = 0; k < K; k += stride) {
    for (size_t l = k + 1; l < K; ++l) {
      const double lim = tr.M * (tr.tbar[l] - tr.tbar[k]) + slack(g1);
      if ((tr.xA[l] - tr.xA[k]).norm() > lim || (tr.xB[l] - tr.xB[k]).norm() > lim) {
        flag("drift between iterates exceeds M*(tbar_l - tbar_k), l=" + std::to_string(l), k);
        break;
      }
    }
  }
  if (tr.status == GapStatus::Converged && tr.xAB) {
    if (tr.distA > tr.bound + slack(g1)) bad.push_back("terminal bound violated for xA");
    if (tr.distB > tr.bound + slack(g1)) bad.push_back("terminal bound violated for xB");
  }
  return bad;
}

GapTrace gap_reduction_solve(const SetSpec& A, const SetSpec& B, const Vec& x0, const Vec& xA, const Vec& xB,
                             double M, double eta, double delta, double tol, const GapOptions& opt) {
  const int n = A.dim();
  if (B.dim() != n) throw Error(ErrorKind::DimensionMismatch, "gap_reduction_solve: set dimensions differ");
  require_dim(x0, n, "x0");
  require_dim(xA, n, "xA");
  require_dim(xB, n, "xB");
  if (!(M > 0.0) || !(eta > 0.0) || !(delta > 0.0) || !(tol > 0.0))
    throw Error(ErrorKind::Precondition, "gap_reduction_solve: M, eta, delta and tol must be positive");
  point_in_set(A, xA);
  point_in_set(B, xB);

  GapTrace tr;
  tr.x0 = x0;
  tr.M = M;
  tr.eta = eta;
  tr.delta = delta;
  tr.tol = tol;
  tr.xA.push_back(xA);
  tr.xB.push_back(xB);
  tr.steps.push_back(0.0);
  tr.tbar.push_back(0.0);
  tr.gaps.push_back((xA - xB).norm());
  tr.wA.push_back(Vec::Zero(n));
  tr.wB.push_back(Vec::Zero(n));

  const double g1 = tr.gaps.front();
  tr.start_condition_ok = std::max((xA - x0).norm(), (xB - x0).norm()) + (M / eta) * g1 <= delta * (1.0 + 1e-12);
  tr.bound = (M / eta) * g1 + M * tol / eta;

  tr.status = GapStatus::Budget;
  for (int it = 0; it < opt.max_iters; ++it) {
    const double gap = tr.gaps.back();
    if (gap <= tol) {
      tr.status = GapStatus::Converged;
      break;
    }
    const auto grid = step_grid(delta, gap, eta, opt.oracle.t_floor);
    const auto s = grid.empty() ? std::nullopt
                                : tangential_step_oracle(A, B, tr.xA.back(), tr.xB.back(), M, eta, grid, opt.oracle);
    if (!s) {
      tr.status = GapStatus::Stalled;
      break;
    }
    tr.xA.push_back(tr.xA.back() + s->t * s->wA);
    tr.xB.push_back(tr.xB.back() + s->t * s->wB);
    tr.steps.push_back(s->t);
    tr.tbar.push_back(tr.tbar.back() + s->t);
    tr.gaps.push_back((tr.xA.back() - tr.xB.back()).norm());
    tr.wA.push_back(s->wA);
    tr.wB.push_back(s->wB);
  }
  if (tr.status == GapStatus::Budget && tr.gaps.back() <= tol) tr.status = GapStatus::Converged;

  if (tr.status == GapStatus::Converged) {
    const Vec& a = tr.xA.back();
    const Vec& b = tr.xB.back();
    Vec xab = a;
    if (tr.gaps.back() > 0.0) {
      xab = proj(B, proj(A, 0.5 * (a + b)));
    }
    if (distance(A, xab) <= tol && distance(B, xab) <= tol) {
      tr.xAB = xab;
      tr.distA = (xab - xA).norm();
      tr.distB = (xab - xB).norm();
    } else {
      tr.status = GapStatus::Stalled;
    }
  }
  tr.violations = check_trace(tr);
  return tr;
}

mpq_class admissible_radius(double M, double eta, double delta) {
  if (!(M > 0.0) || !(eta > 0.0) || !(delta > 0.0) || !std::isfinite(M) || !std::isfinite(eta) ||
      !std::isfinite(delta))
    throw Error(ErrorKind::Precondition, "admissible_radius: inputs must be positive and finite");
  mpq_class r = mpq_class(delta) / (1 + 2 * mpq_class(M) / mpq_class(eta));
  r.canonicalize();
  return r;
}

NonseparationResult nonseparation_sequence(const SetSpec& A, const SetSpec& B, const Vec& x0, const Vec& vA,
                                           const Vec& vB, double K, int count, double t0) {
  const int n = A.dim();
  if (B.dim() != n) throw Error(ErrorKind::DimensionMismatch, "nonseparation_sequence: set dimensions differ");
  require_dim(x0, n, "x0");
  require_dim(vA, n, "vA");
  require_dim(vB, n, "vB");
  if (!(K > 0.0) || !std::isfinite(K)) throw Error(ErrorKind::Precondition, "nonseparation_sequence: K must be positive");
  if (std::abs(vA.norm() - 1.0) > 1e-9 || std::abs(vB.norm() - 1.0) > 1e-9)
    throw Error(ErrorKind::Precondition, "nonseparation_sequence: vA and vB must be unit vectors");
  const double gap = (vA - vB).norm();
  if (!(gap < 1.0 / K)) throw Error(ErrorKind::Precondition, "nonseparation_sequence: |vA - vB| >= 1/K");
  if (classify_direction(A, x0, vA).bouligand != Membership::In)
    throw Error(ErrorKind::Precondition, "nonseparation_sequence: vA is not in the Bouligand cone of A");
  if (classify_direction(B, x0, vB).derivable != Membership::In)
    throw Error(ErrorKind::Precondition, "nonseparation_sequence: vB is not in the derivable cone of B");

  const IntersectionOracle inter(A, B);
  NonseparationResult out;
  out.epsilon = 0.5 * (1.0 / K - gap);
  for (int m = 0; m < count; ++m) {
    const double t = t0 * std::ldexp(1.0, -m);
    const Vec a = proj(A, x0 + t * vA);
    const double vmA = (a - x0).norm() / t;
    const Vec xab = inter.project(a);
    const double r = (xab - x0).norm();
    const double lim = 2.0 * t * vmA;
    if (!(r > 0.0)) throw Error(ErrorKind::NonConvergence, "nonseparation_sequence: point coincides with x0");
    if (r > lim * (1.0 + 1e-9) + 1e-12)
      throw Error(ErrorKind::NonConvergence, "nonseparation_sequence: distance bound 2 t |v_m^A| violated");
    out.points.push_back(xab);
    out.t.push_back(t);
    out.bound.push_back(lim);
  }
  return out;
}

NonseparationResult nonseparation_sequence(const SetSpec& A, const SetSpec& B, const Vec& x0, const Vec& vA,
                                           const Vec& vB, const TransversalityCertificate& sub, int count,
                                           double t0) {
  if (sub.notion != Notion::Subtransversal || !sub.certified() || !sub.constants.count("K"))
    throw Error(ErrorKind::Precondition, "nonseparation_sequence: no certified subtransversality constant");
  return nonseparation_sequence(A, B, x0, vA, vB, sub.constants.at("K"), count, t0);
}

Vec ProductVector::joined() const {
  Vec v(x.size() + 1);
  v << x, r;
  return v;
}

double ProductVector::norm() const { return std::max(x.norm(), std::abs(r)); }

ProductUnitPair product_unit_vectors(const PolyCone& C1, const PolyCone& C2base, double epsilon) {
  const int n = C2base.dim();
  if (C1.dim() != n + 1) throw Error(ErrorKind::DimensionMismatch, "product_unit_vectors: C1 must live in X x R");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::Precondition, "product_unit_vectors: epsilon in (0,1)");
  const PolyCone C2 = cone_product(C2base, nonpositive_halfline());
  if (!is_dense_difference(C1, C2).dense)
    throw Error(ErrorKind::Precondition, "product_unit_vectors: C1 - C2 x (-inf,0] is not dense");

  const auto g1 = C1.generators();
  const auto g2 = C2.generators();
  const int p = static_cast<int>(g1.size());
  const int q = static_cast<int>(g2.size());
  const int nv = p + q + 1;
  const int dim = n + 1;
  Vec target = Vec::Zero(dim);
  target[n] = -1.0;
  // |(sum lambda g1 - sum mu g2 - target)_i| <= s * scale_i, with scale 1/sqrt(n)
  // on the X block (so its Euclidean norm stays below s) and 1 on R.
  LpProblem lp;
  lp.c = Vec::Zero(nv);
  lp.c[nv - 1] = 1.0;
  lp.A_ub = Mat::Zero(2 * dim, nv);
  lp.b_ub = Vec::Zero(2 * dim);
  for (int i = 0; i < dim; ++i) {
    const double scale = i < n ? 1.0 / std::sqrt(static_cast<double>(std::max(n, 1))) : 1.0;
    for (int j = 0; j < p; ++j) {
      lp.A_ub(2 * i, j) = g1[j][i];
      lp.A_ub(2 * i + 1, j) = -g1[j][i];
    }
    for (int j = 0; j < q; ++j) {
      lp.A_ub(2 * i, p + j) = -g2[j][i];
      lp.A_ub(2 * i + 1, p + j) = g2[j][i];
    }
    lp.A_ub(2 * i, nv - 1) = -scale;
    lp.A_ub(2 * i + 1, nv - 1) = -scale;
    lp.b_ub[2 * i] = target[i];
    lp.b_ub[2 * i + 1] = -target[i];
  }
  lp.lower = Vec::Zero(nv);
  lp.upper = Vec::Constant(nv, 1e6);
  const auto res = lp_solve(lp);
  if (!res.optimal() || res.x[nv - 1] >= epsilon / 2.0)
    throw Error(ErrorKind::NonConvergence, "product_unit_vectors: could not approximate (0,-1) within epsilon/2");

  Vec v1 = Vec::Zero(dim);
  Vec v2 = Vec::Zero(dim);
  for (int j = 0; j < p; ++j) v1 += res.x[j] * g1[j];
  for (int j = 0; j < q; ++j) v2 += res.x[p + j] * g2[j];

  ProductUnitPair out;
  ProductVector a{v1.head(n), v1[n]};
  ProductVector b{v2.head(n), v2[n] - 1.0};
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0)) throw Error(ErrorKind::NonConvergence, "product_unit_vectors: degenerate approximation");
  out.w1 = {a.x / na, a.r / na};
  out.w2 = {b.x / nb, b.r / nb};
  out.distance = ProductVector{out.w1.x - out.w2.x, out.w1.r - out.w2.r}.norm();
  out.approximation = ProductVector{(v1 - v2 - target).head(n), (v1 - v2 - target)[n]}.norm();
  if (!(out.distance < epsilon))
    throw Error(ErrorKind::NonConvergence, "product_unit_vectors: constructed pair is not within epsilon");
  return out;
}

MetricFormReport check_metric_form(const SetSpec& A, const SetSpec& B, const Vec& x0, double M, double eta,
                                   double delta, int samples, std::uint64_t seed) {
  return check_metric_form(A, B, M, eta, delta, sample_pairs(A, B, x0, delta, samples, seed));
}

MetricFormReport check_metric_form(const SetSpec& A, const SetSpec& B, double M, double eta, double delta,
                                   const std::vector<PointPair>& pairs) {
  if (!(M > 0.0) || !(eta > 0.0) || !(delta > 0.0))
    throw Error(ErrorKind::Precondition, "check_metric_form: M, eta and delta must be positive");
  MetricFormReport rep;
  rep.zeta = eta / M;
  for (const auto& pr : pairs) {
    ++rep.samples;
    const double gap = (pr.xA - pr.xB).norm();
    if (gap == 0.0) {
      ++rep.holds;
      continue;
    }
    const auto st = tangential_step_oracle(A, B, pr.xA, pr.xB, M, eta, step_grid(delta, gap, eta));
    if (!st) {
      ++rep.no_step;
      continue;
    }
    const double s = M * st->t;
    const Vec pA = pr.xA + st->t * st->wA;
    const Vec pB = pr.xB + st->t * st->wB;
    const bool inside = (pA - pr.xA).norm() <= s * (1.0 + 1e-12) && (pB - pr.xB).norm() <= s * (1.0 + 1e-12);
    if (inside && (pA - pB).norm() <= gap - s * rep.zeta + 1e-12 * (1.0 + gap)) ++rep.holds;
  }
  return rep;
}

}  // namespace tvx
