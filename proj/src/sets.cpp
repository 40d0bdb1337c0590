#include "tvx/sets.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace tvx {

// ---------------------------------------------------------------------------
// PolyFunction

bool PolyFunction::in_domain(const Vec& x, double tol) const {
  for (Eigen::Index i = 0; i < domain_A.rows(); ++i)
    if (domain_A.row(i).dot(x) > domain_b[i] + tol) return false;
  return true;
}

double PolyFunction::value(const Vec& x) const {
  require_dim(x, slopes.cols(), "PolyFunction::value");
  if (!in_domain(x)) throw Error(ErrorKind::Precondition, "PolyFunction::value: point outside effective domain");
  return (slopes * x + offsets).maxCoeff();
}

PolyFunction PolyFunction::affine(const Vec& slope, double offset) {
  PolyFunction f;
  f.slopes = slope.transpose();
  f.offsets = Vec::Constant(1, offset);
  f.domain_A = Mat(0, slope.size());
  f.domain_b = Vec(0);
  return f;
}

PolyFunction PolyFunction::max_affine(const Mat& slopes, const Vec& offsets) {
  if (slopes.rows() != offsets.size() || slopes.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch, "PolyFunction::max_affine: piece count");
  PolyFunction f;
  f.slopes = slopes;
  f.offsets = offsets;
  f.domain_A = Mat(0, slopes.cols());
  f.domain_b = Vec(0);
  return f;
}

PolyFunction PolyFunction::indicator(const Mat& A, const Vec& b) {
  PolyFunction f;
  f.slopes = Mat::Zero(1, A.cols());
  f.offsets = Vec::Zero(1);
  f.domain_A = A;
  f.domain_b = b;
  return f;
}

PolyFunction PolyFunction::l1_norm(int dim) {
  const int pieces = 1 << dim;
  Mat S(pieces, dim);
  for (int p = 0; p < pieces; ++p)
    for (int j = 0; j < dim; ++j) S(p, j) = (p >> j) & 1 ? -1.0 : 1.0;
  return max_affine(S, Vec::Zero(pieces));
}

const char* to_string(SetKind kind) {
  switch (kind) {
    case SetKind::Polyhedron: return "polyhedron";
    case SetKind::Ball: return "ball";
    case SetKind::Affine: return "affine";
    case SetKind::LevelSet: return "levelset";
    case SetKind::Translate: return "translate";
    case SetKind::Union: return "union";
    case SetKind::Epigraph: return "epigraph";
    case SetKind::Product: return "product";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Construction

namespace {

Mat empty_rows(Eigen::Index n) { return Mat(0, n); }

bool polyhedron_nonempty(const PolyhedronData& p, int n) {
  if (p.A.rows() == 0 && p.Aeq.rows() == 0) return true;
  LpProblem lp;
  lp.c = Vec::Zero(n);
  lp.A_ub = p.A;
  lp.b_ub = p.b;
  lp.A_eq = p.Aeq;
  lp.b_eq = p.beq;
  return lp_solve(lp).status != LpStatus::Infeasible;
}

PolyhedronData epigraph_rows(const PolyFunction& f) {
  const Eigen::Index n = f.slopes.cols();
  const Eigen::Index k = f.slopes.rows();
  const Eigen::Index m = f.domain_A.rows();
  PolyhedronData p;
  p.A = Mat::Zero(k + m, n + 1);
  p.b = Vec::Zero(k + m);
  p.A.topLeftCorner(k, n) = f.slopes;
  p.A.block(0, n, k, 1).setConstant(-1.0);
  p.b.head(k) = -f.offsets;
  if (m) {
    p.A.bottomLeftCorner(m, n) = f.domain_A;
    p.b.tail(m) = f.domain_b;
  }
  p.Aeq = empty_rows(n + 1);
  p.beq = Vec(0);
  return p;
}

}  // namespace

SetSpec SetSpec::polyhedron(Mat A, Vec b, Mat Aeq, Vec beq) {
  const Eigen::Index n = A.rows() ? A.cols() : Aeq.cols();
  if (A.rows() == 0) A = empty_rows(n);
  if (Aeq.rows() == 0) Aeq = empty_rows(n);
  if (b.size() == 0) b = Vec(0);
  if (beq.size() == 0) beq = Vec(0);
  if (n == 0) throw Error(ErrorKind::DimensionMismatch, "polyhedron: zero ambient dimension");
  if (A.cols() != n || Aeq.cols() != n || A.rows() != b.size() || Aeq.rows() != beq.size())
    throw Error(ErrorKind::DimensionMismatch, "polyhedron: inconsistent shapes");
  PolyhedronData data{std::move(A), std::move(b), std::move(Aeq), std::move(beq)};
  if (!polyhedron_nonempty(data, static_cast<int>(n))) throw Error(ErrorKind::Infeasible, "polyhedron: empty set");
  return SetSpec(std::make_shared<const Node>(std::move(data)), static_cast<int>(n));
}

SetSpec SetSpec::halfspace(const Vec& normal, double offset) {
  return polyhedron(normal.transpose(), Vec::Constant(1, offset));
}

SetSpec SetSpec::box(const Vec& lo, const Vec& hi) {
  const Eigen::Index n = lo.size();
  require_dim(hi, n, "box");
  Mat A(2 * n, n);
  A << Mat::Identity(n, n), -Mat::Identity(n, n);
  Vec b(2 * n);
  b << hi, -lo;
  return polyhedron(A, b);
}

SetSpec SetSpec::whole_space(int dim) {
  PolyhedronData data{empty_rows(dim), Vec(0), empty_rows(dim), Vec(0)};
  return SetSpec(std::make_shared<const Node>(std::move(data)), dim);
}

SetSpec SetSpec::ball(Vec center, double radius) {
  require_finite(center, "ball");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw Error(ErrorKind::Precondition, "ball: radius must be finite and >= 0");
  const int n = static_cast<int>(center.size());
  return SetSpec(std::make_shared<const Node>(BallData{std::move(center), radius}), n);
}

SetSpec SetSpec::affine(Vec base, Mat directions) {
  require_finite(base, "affine");
  const Eigen::Index n = base.size();
  if (directions.size() == 0) directions = Mat(n, 0);
  if (directions.rows() != n) throw Error(ErrorKind::DimensionMismatch, "affine: direction length");
  AffineData data;
  data.base = std::move(base);
  data.directions = std::move(directions);
  if (data.directions.cols() == 0) {
    data.basis = Mat(n, 0);
    data.normals = Mat::Identity(n, n);
  } else {
    Eigen::JacobiSVD<Mat> svd(data.directions, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s[i] > 1e-12 * std::max(1.0, s[0])) ++rank;
    data.basis = svd.matrixU().leftCols(rank);
    data.normals = svd.matrixU().rightCols(n - rank).transpose();
  }
  return SetSpec(std::make_shared<const Node>(std::move(data)), static_cast<int>(n));
}

SetSpec SetSpec::line(const Vec& base, const Vec& direction) { return affine(base, direction); }

SetSpec SetSpec::point(const Vec& p) { return affine(p, Mat(p.size(), 0)); }

SetSpec SetSpec::level_set(int dim, ScalarFn g, GradFn grad, LevelSense sense) {
  if (!g || !grad) throw Error(ErrorKind::Precondition, "level_set: function and gradient required");
  LevelSetData data{std::move(g), std::move(grad), sense, std::nullopt};
  return SetSpec(std::make_shared<const Node>(std::move(data)), dim);
}

SetSpec SetSpec::quadratic_level_set(Quadratic quad, LevelSense sense) {
  const int n = static_cast<int>(quad.q.size());
  if (quad.Q.rows() != n || quad.Q.cols() != n) throw Error(ErrorKind::DimensionMismatch, "quadratic_level_set: Q shape");
  const Quadratic qd = quad;
  ScalarFn g = [qd](const Vec& x) { return x.dot(qd.Q * x) + qd.q.dot(x) + qd.c; };
  GradFn grad = [qd](const Vec& x) -> Vec { return (qd.Q + qd.Q.transpose()) * x + qd.q; };
  LevelSetData data{std::move(g), std::move(grad), sense, std::move(quad)};
  return SetSpec(std::make_shared<const Node>(std::move(data)), n);
}

SetSpec SetSpec::translate(const SetSpec& inner, Vec shift) {
  require_dim(shift, inner.dim(), "translate");
  const int n = inner.dim();
  TranslateData data{std::make_shared<const SetSpec>(inner), std::move(shift)};
  return SetSpec(std::make_shared<const Node>(std::move(data)), n);
}

SetSpec SetSpec::union_of(std::vector<SetSpec> members) {
  if (members.empty()) throw Error(ErrorKind::Precondition, "union: no members");
  const int n = members.front().dim();
  for (const auto& m : members)
    if (m.dim() != n) throw Error(ErrorKind::DimensionMismatch, "union: members differ in ambient dimension");
  return SetSpec(std::make_shared<const Node>(UnionData{std::move(members)}), n);
}

SetSpec SetSpec::epigraph(int base_dim, ScalarFn f, GradFn grad, DomainFn in_domain) {
  if (!f) throw Error(ErrorKind::Precondition, "epigraph: function required");
  if (!in_domain) in_domain = [](const Vec&) { return true; };
  EpigraphData data{base_dim, std::move(f), std::move(grad), std::move(in_domain), std::nullopt};
  return SetSpec(std::make_shared<const Node>(std::move(data)), base_dim + 1);
}

SetSpec SetSpec::epigraph(PolyFunction pf) {
  const int n = pf.dim();
  const PolyFunction copy = pf;
  EpigraphData data;
  data.base_dim = n;
  data.f = [copy](const Vec& x) { return (copy.slopes * x + copy.offsets).maxCoeff(); };
  data.grad = [copy](const Vec& x) {
    Eigen::Index j = 0;
    (copy.slopes * x + copy.offsets).maxCoeff(&j);
    return Vec(copy.slopes.row(j).transpose());
  };
  data.in_domain = [copy](const Vec& x) { return copy.in_domain(x); };
  data.poly = std::move(pf);
  if (!polyhedron_nonempty(epigraph_rows(*data.poly), n + 1))
    throw Error(ErrorKind::Infeasible, "epigraph: empty effective domain");
  return SetSpec(std::make_shared<const Node>(std::move(data)), n + 1);
}

SetSpec SetSpec::product(std::vector<SetSpec> factors) {
  if (factors.empty()) throw Error(ErrorKind::Precondition, "product: no factors");
  int n = 0;
  for (const auto& f : factors) n += f.dim();
  return SetSpec(std::make_shared<const Node>(ProductData{std::move(factors)}), n);
}

SetKind SetSpec::kind() const { return static_cast<SetKind>(node_->index()); }

bool SetSpec::exact_projection() const {
  switch (kind()) {
    case SetKind::Polyhedron:
    case SetKind::Ball:
    case SetKind::Affine: return true;
    case SetKind::LevelSet: return false;
    case SetKind::Translate: return get<TranslateData>()->inner->exact_projection();
    case SetKind::Union:
      return std::all_of(get<UnionData>()->members.begin(), get<UnionData>()->members.end(),
                         [](const SetSpec& m) { return m.exact_projection(); });
    case SetKind::Epigraph: return get<EpigraphData>()->poly.has_value();
    case SetKind::Product:
      return std::all_of(get<ProductData>()->factors.begin(), get<ProductData>()->factors.end(),
                         [](const SetSpec& m) { return m.exact_projection(); });
  }
  return false;
}

bool SetSpec::convex_exact() const {
  switch (kind()) {
    case SetKind::Polyhedron:
    case SetKind::Ball:
    case SetKind::Affine: return true;
    case SetKind::LevelSet:
    case SetKind::Union: return false;
    case SetKind::Translate: return get<TranslateData>()->inner->convex_exact();
    case SetKind::Epigraph: return get<EpigraphData>()->poly.has_value();
    case SetKind::Product:
      return std::all_of(get<ProductData>()->factors.begin(), get<ProductData>()->factors.end(),
                         [](const SetSpec& m) { return m.convex_exact(); });
  }
  return false;
}

// ---------------------------------------------------------------------------
// Oracles

std::optional<PolyhedronData> polyhedral_form(const SetSpec& S) {
  const Eigen::Index n = S.dim();
  switch (S.kind()) {
    case SetKind::Polyhedron: return *S.get<PolyhedronData>();
    case SetKind::Affine: {
      const auto& a = *S.get<AffineData>();
      return PolyhedronData{empty_rows(n), Vec(0), a.normals, a.normals * a.base};
    }
    case SetKind::Translate: {
      const auto& t = *S.get<TranslateData>();
      auto inner = polyhedral_form(*t.inner);
      if (!inner) return std::nullopt;
      if (inner->A.rows()) inner->b += inner->A * t.shift;
      if (inner->Aeq.rows()) inner->beq += inner->Aeq * t.shift;
      return inner;
    }
    case SetKind::Epigraph: {
      const auto& e = *S.get<EpigraphData>();
      if (!e.poly) return std::nullopt;
      return epigraph_rows(*e.poly);
    }
    case SetKind::Product: {
      const auto& p = *S.get<ProductData>();
      std::vector<PolyhedronData> parts;
      Eigen::Index rows = 0, eq_rows = 0;
      for (const auto& f : p.factors) {
        auto part = polyhedral_form(f);
        if (!part) return std::nullopt;
        rows += part->A.rows();
        eq_rows += part->Aeq.rows();
        parts.push_back(std::move(*part));
      }
      PolyhedronData out{Mat::Zero(rows, n), Vec::Zero(rows), Mat::Zero(eq_rows, n), Vec::Zero(eq_rows)};
      Eigen::Index r = 0, re = 0, c = 0;
      for (size_t k = 0; k < parts.size(); ++k) {
        const auto& part = parts[k];
        const Eigen::Index w = p.factors[k].dim();
        out.A.block(r, c, part.A.rows(), w) = part.A;
        out.b.segment(r, part.A.rows()) = part.b;
        out.Aeq.block(re, c, part.Aeq.rows(), w) = part.Aeq;
        out.beq.segment(re, part.Aeq.rows()) = part.beq;
        r += part.A.rows();
        re += part.Aeq.rows();
        c += w;
      }
      return out;
    }
    default: return std::nullopt;
  }
}

namespace {

bool polyhedron_contains(const PolyhedronData& p, const Vec& x) {
  for (Eigen::Index i = 0; i < p.A.rows(); ++i)
    if (p.A.row(i).dot(x) > p.b[i]) return false;
  for (Eigen::Index i = 0; i < p.Aeq.rows(); ++i)
    if (p.Aeq.row(i).dot(x) != p.beq[i]) return false;
  return true;
}

Vec project_onto(const PolyhedronData& p, const Vec& x) {
  if (polyhedron_contains(p, x)) return x;
  return project_polyhedron(x, p.A, p.b, p.Aeq, p.beq);
}

Vec project_ball(const BallData& b, const Vec& x) {
  const Vec d = x - b.center;
  const double n = d.norm();
  if (n <= b.radius) return x;
  return b.center + (b.radius / n) * d;
}

Vec project_affine(const AffineData& a, const Vec& x) {
  if (a.basis.cols() == 0) return a.base;
  return a.base + a.basis * (a.basis.transpose() * (x - a.base));
}

ApproxProjection project_level_set(const LevelSetData& L, const Vec& x, int starts) {
  const double gx = L.g(x);
  if ((L.sense == LevelSense::LessEqual && gx <= 0.0) || (L.sense == LevelSense::Equal && gx == 0.0))
    return {x, 0.0, true};
  const Eigen::Index n = x.size();
  std::vector<Vec> inits{x};
  for (int k = 0; static_cast<int>(inits.size()) < std::max(1, starts); ++k) {
    const Eigen::Index axis = k % n;
    const double sign = (k / n) % 2 == 0 ? 1.0 : -1.0;
    const double scale = 0.1 * std::pow(2.0, static_cast<double>(k / (2 * n)));
    inits.push_back(x + sign * scale * Vec::Unit(n, axis));
    if (k > 8 * n) break;
  }

  std::optional<Vec> best;
  double best_d = kInf;
  for (const Vec& y0 : inits) {
    for (const double damping : {1.0, 0.5}) {
      Vec y = y0;
      bool converged = false;
      for (int it = 0; it < 400; ++it) {
        const Vec gr = L.grad(y);
        const double gn2 = gr.squaredNorm();
        if (gn2 < 1e-300) break;
        const double lam = (L.g(y) + gr.dot(x - y)) / gn2;
        const Vec target = x - lam * gr;
        const Vec next = y + damping * (target - y);
        const double move = (next - y).norm();
        y = next;
        if (move <= 1e-14 * (1.0 + y.norm())) {
          converged = true;
          break;
        }
      }
      if (!converged && std::abs(L.g(y)) > 1e-10) continue;
      const double gy = L.g(y);
      const bool feasible = L.sense == LevelSense::Equal ? std::abs(gy) <= 1e-10 : gy <= 1e-10;
      if (!feasible) continue;
      const double d = (y - x).norm();
      if (d < best_d) {
        best_d = d;
        best = y;
      }
      break;
    }
  }
  if (!best) throw Error(ErrorKind::NonConvergence, "level set projection: no start converged");
  return {*best, best_d, true};
}

Vec numeric_gradient(const ScalarFn& f, const Vec& y) {
  Vec g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double h = 1e-7 * std::max(1.0, std::abs(y[i]));
    Vec a = y, b = y;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

ApproxProjection project_epigraph_general(const EpigraphData& E, const Vec& z, int starts) {
  const Eigen::Index n = E.base_dim;
  const Vec y0 = z.head(n);
  const double r0 = z[n];
  if (E.in_domain(y0) && r0 >= E.f(y0)) return {z, 0.0, true};

  const auto phi = [&](const Vec& y) {
    const double over = std::max(0.0, E.f(y) - r0);
    return (y - y0).squaredNorm() + over * over;
  };
  const auto grad_phi = [&](const Vec& y) -> Vec {
    const double over = std::max(0.0, E.f(y) - r0);
    Vec g = 2.0 * (y - y0);
    if (over > 0.0) g += 2.0 * over * (E.grad ? E.grad(y) : numeric_gradient(E.f, y));
    return g;
  };

  std::vector<Vec> inits;
  if (E.in_domain(y0)) inits.push_back(y0);
  for (int k = 0; static_cast<int>(inits.size()) < std::max(1, starts) && k < 16 * static_cast<int>(n); ++k) {
    const Eigen::Index axis = k % n;
    const double sign = (k / n) % 2 == 0 ? 1.0 : -1.0;
    const double scale = 0.05 * std::pow(2.0, static_cast<double>(k / (2 * n)));
    const Vec cand = y0 + sign * scale * Vec::Unit(n, axis);
    if (E.in_domain(cand)) inits.push_back(cand);
  }
  if (inits.empty()) throw Error(ErrorKind::NonConvergence, "epigraph projection: no start in effective domain");

  std::optional<Vec> best;
  double best_v = kInf;
  for (const Vec& start : inits) {
    Vec y = start;
    double v = phi(y);
    for (int it = 0; it < 2000; ++it) {
      const Vec g = grad_phi(y);
      if (g.norm() <= 1e-13 * (1.0 + y.norm())) break;
      double step = 0.5;
      bool moved = false;
      while (step > 1e-16) {
        const Vec cand = y - step * g;
        if (E.in_domain(cand)) {
          const double vc = phi(cand);
          if (vc <= v - 1e-4 * step * g.squaredNorm()) {
            moved = (cand - y).norm() > 1e-14 * (1.0 + y.norm());
            y = cand;
            v = vc;
            break;
          }
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (v < best_v) {
      best_v = v;
      best = y;
    }
  }
  Vec out(n + 1);
  out.head(n) = *best;
  out[n] = std::max(r0, E.f(*best));
  return {out, std::sqrt(best_v), true};
}

void require_point(const SetSpec& S, const Vec& x, const char* what) {
  require_dim(x, S.dim(), what);
  require_finite(x, what);
}

}  // namespace

Vec project(const SetSpec& S, const Vec& x) {
  require_point(S, x, "project");
  switch (S.kind()) {
    case SetKind::Polyhedron: return project_onto(*S.get<PolyhedronData>(), x);
    case SetKind::Ball: return project_ball(*S.get<BallData>(), x);
    case SetKind::Affine: return project_affine(*S.get<AffineData>(), x);
    case SetKind::LevelSet:
      throw Error(ErrorKind::Unsupported, "project: level sets need project_approx (sampled fallback)");
    case SetKind::Translate: {
      const auto& t = *S.get<TranslateData>();
      return t.shift + project(*t.inner, x - t.shift);
    }
    case SetKind::Union: {
      const auto& u = *S.get<UnionData>();
      Vec best;
      double best_d = kInf;
      for (const auto& m : u.members) {
        const Vec p = project(m, x);
        const double d = (p - x).norm();
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      return best;
    }
    case SetKind::Epigraph: {
      const auto& e = *S.get<EpigraphData>();
      if (!e.poly) throw Error(ErrorKind::Unsupported, "project: non-polyhedral epigraph needs project_approx");
      return project_onto(epigraph_rows(*e.poly), x);
    }
    case SetKind::Product: {
      const auto& p = *S.get<ProductData>();
      Vec out(x.size());
      Eigen::Index c = 0;
      for (const auto& f : p.factors) {
        out.segment(c, f.dim()) = project(f, x.segment(c, f.dim()));
        c += f.dim();
      }
      return out;
    }
  }
  throw Error(ErrorKind::Unsupported, "project: unknown variant");
}

ApproxProjection project_approx(const SetSpec& S, const Vec& x, int starts) {
  require_point(S, x, "project_approx");
  if (S.exact_projection()) {
    const Vec p = project(S, x);
    return {p, (p - x).norm(), false};
  }
  switch (S.kind()) {
    case SetKind::LevelSet: return project_level_set(*S.get<LevelSetData>(), x, starts);
    case SetKind::Epigraph: return project_epigraph_general(*S.get<EpigraphData>(), x, starts);
    case SetKind::Translate: {
      const auto& t = *S.get<TranslateData>();
      auto r = project_approx(*t.inner, x - t.shift, starts);
      r.point += t.shift;
      return r;
    }
    case SetKind::Union: {
      ApproxProjection best{x, kInf, false};
      bool any_approx = false;
      for (const auto& m : S.get<UnionData>()->members) {
        const auto r = project_approx(m, x, starts);
        any_approx = any_approx || r.approximate;
        if (r.distance < best.distance) best = r;
      }
      best.approximate = any_approx;
      return best;
    }
    case SetKind::Product: {
      const auto& p = *S.get<ProductData>();
      ApproxProjection out{Vec(x.size()), 0.0, false};
      Eigen::Index c = 0;
      double sq = 0.0;
      for (const auto& f : p.factors) {
        const auto r = project_approx(f, x.segment(c, f.dim()), starts);
        out.point.segment(c, f.dim()) = r.point;
        out.approximate = out.approximate || r.approximate;
        sq += r.distance * r.distance;
        c += f.dim();
      }
      out.distance = std::sqrt(sq);
      return out;
    }
    default: break;
  }
  throw Error(ErrorKind::Unsupported, "project_approx: unknown variant");
}

double distance(const SetSpec& S, const Vec& x) {
  require_point(S, x, "distance");
  switch (S.kind()) {
    case SetKind::Polyhedron: {
      const auto& p = *S.get<PolyhedronData>();
      if (polyhedron_contains(p, x)) return 0.0;
      return (project_onto(p, x) - x).norm();
    }
    case SetKind::Ball: {
      const auto& b = *S.get<BallData>();
      return std::max(0.0, (x - b.center).norm() - b.radius);
    }
    case SetKind::Affine: {
      const auto& a = *S.get<AffineData>();
      return (project_affine(a, x) - x).norm();
    }
    case SetKind::Translate: {
      const auto& t = *S.get<TranslateData>();
      return distance(*t.inner, x - t.shift);
    }
    case SetKind::Union: {
      double best = kInf;
      for (const auto& m : S.get<UnionData>()->members) best = std::min(best, distance(m, x));
      return best;
    }
    case SetKind::Product: {
      const auto& p = *S.get<ProductData>();
      double sq = 0.0;
      Eigen::Index c = 0;
      for (const auto& f : p.factors) {
        const double d = distance(f, x.segment(c, f.dim()));
        sq += d * d;
        c += f.dim();
      }
      return std::sqrt(sq);
    }
    case SetKind::Epigraph: {
      const auto& e = *S.get<EpigraphData>();
      if (e.poly) {
        const auto rows = epigraph_rows(*e.poly);
        if (polyhedron_contains(rows, x)) return 0.0;
        return (project_onto(rows, x) - x).norm();
      }
      return project_approx(S, x).distance;
    }
    case SetKind::LevelSet: return project_approx(S, x).distance;
  }
  throw Error(ErrorKind::Unsupported, "distance: unknown variant");
}

double distance(const SetSpec& S, const Vec& x, const NormKind& norm_kind) {
  if (norm_kind.kind == NormKind::Kind::Euclidean) return distance(S, x);
  require_point(S, x, "distance");
  const auto* p = S.get<ProductData>();
  if (!p) throw Error(ErrorKind::Unsupported, "distance: max-product norm needs a Product set");
  double head = 0.0, tail = 0.0;
  Eigen::Index c = 0;
  for (const auto& f : p->factors) {
    const double d = distance(f, x.segment(c, f.dim()));
    if (c + f.dim() <= norm_kind.split) {
      head += d * d;
    } else if (c >= norm_kind.split) {
      tail += d * d;
    } else {
      throw Error(ErrorKind::Unsupported, "distance: split index cuts through a product factor");
    }
    c += f.dim();
  }
  return std::max(std::sqrt(head), std::sqrt(tail));
}

bool member(const SetSpec& S, const Vec& x, double tol) { return distance(S, x) <= tol; }

PointInSet point_in_set(const SetSpec& S, const Vec& x, double tol) {
  const double r = distance(S, x);
  if (r > tol) throw Error(ErrorKind::Precondition, "point_in_set: residual " + std::to_string(r) + " exceeds tolerance");
  return {x, r};
}

// ---------------------------------------------------------------------------
// Intersection

namespace {

using Row = std::pair<std::vector<double>, double>;

std::vector<Row> collect_rows(const Mat& A, const Vec& b) {
  std::vector<Row> rows;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    std::vector<double> r(static_cast<size_t>(A.cols()));
    for (Eigen::Index j = 0; j < A.cols(); ++j) r[static_cast<size_t>(j)] = A(i, j);
    rows.emplace_back(std::move(r), b[i]);
  }
  return rows;
}

void rows_to_matrix(std::vector<Row> rows, Eigen::Index n, Mat& A, Vec& b) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  A = Mat(static_cast<Eigen::Index>(rows.size()), n);
  b = Vec(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(static_cast<Eigen::Index>(i), j) = rows[i].first[static_cast<size_t>(j)];
    b[static_cast<Eigen::Index>(i)] = rows[i].second;
  }
}

SetSpec normalize_translate(const SetSpec& S) {
  const auto* t = S.get<TranslateData>();
  if (!t) return S;
  const SetSpec inner = normalize_translate(*t->inner);
  switch (inner.kind()) {
    case SetKind::Ball: {
      const auto& b = *inner.get<BallData>();
      return SetSpec::ball(b.center + t->shift, b.radius);
    }
    case SetKind::Affine: {
      const auto& a = *inner.get<AffineData>();
      return SetSpec::affine(a.base + t->shift, a.directions);
    }
    case SetKind::Union: {
      std::vector<SetSpec> members;
      for (const auto& m : inner.get<UnionData>()->members) members.push_back(SetSpec::translate(m, t->shift));
      return SetSpec::union_of(std::move(members));
    }
    default: break;
  }
  if (auto p = polyhedral_form(SetSpec::translate(inner, t->shift)))
    return SetSpec::polyhedron(p->A, p->b, p->Aeq, p->beq);
  return S;
}

std::optional<Vec> singleton_point(const SetSpec& S) {
  if (const auto* a = S.get<AffineData>(); a && a->basis.cols() == 0) return a->base;
  if (const auto* b = S.get<BallData>(); b && b->radius == 0.0) return b->center;
  return std::nullopt;
}

SetSpec intersect_balls(const BallData& a, const BallData& b) {
  const double d = (a.center - b.center).norm();
  const double scale = std::max({1.0, a.radius, b.radius});
  if (d == 0.0 && a.radius == b.radius) return SetSpec::ball(a.center, a.radius);
  if (d + std::min(a.radius, b.radius) <= std::max(a.radius, b.radius))
    return a.radius <= b.radius ? SetSpec::ball(a.center, a.radius) : SetSpec::ball(b.center, b.radius);
  const double gap = d - (a.radius + b.radius);
  if (std::abs(gap) <= 1e-12 * scale) {
    // Externally tangent: the unique common point, computed symmetrically.
    const Vec pa = a.center + (a.radius / d) * (b.center - a.center);
    const Vec pb = b.center + (b.radius / d) * (a.center - b.center);
    return SetSpec::point(0.5 * (pa + pb));
  }
  if (gap > 0.0) throw Error(ErrorKind::Infeasible, "intersect: disjoint balls");
  throw Error(ErrorKind::Unsupported, "intersect: lens-shaped ball intersection has no exact variant");
}

}  // namespace

SetSpec intersect(const SetSpec& S1_in, const SetSpec& S2_in) {
  if (S1_in.dim() != S2_in.dim()) throw Error(ErrorKind::DimensionMismatch, "intersect: ambient dimensions differ");
  const SetSpec S1 = normalize_translate(S1_in);
  const SetSpec S2 = normalize_translate(S2_in);
  const Eigen::Index n = S1.dim();

  if (S1.kind() == SetKind::Union || S2.kind() == SetKind::Union) {
    const bool first = S1.kind() == SetKind::Union;
    const auto& u = first ? *S1.get<UnionData>() : *S2.get<UnionData>();
    const SetSpec& other = first ? S2 : S1;
    std::vector<SetSpec> parts;
    for (const auto& m : u.members) {
      try {
        parts.push_back(first ? intersect(m, other) : intersect(other, m));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Infeasible) throw;
      }
    }
    if (parts.empty()) throw Error(ErrorKind::Infeasible, "intersect: every union member misses the other set");
    if (parts.size() == 1) return parts.front();
    return SetSpec::union_of(std::move(parts));
  }

  const auto p1 = polyhedral_form(S1);
  const auto p2 = polyhedral_form(S2);
  if (p1 && p2) {
    auto rows = collect_rows(p1->A, p1->b);
    auto more = collect_rows(p2->A, p2->b);
    rows.insert(rows.end(), more.begin(), more.end());
    auto eq = collect_rows(p1->Aeq, p1->beq);
    auto more_eq = collect_rows(p2->Aeq, p2->beq);
    eq.insert(eq.end(), more_eq.begin(), more_eq.end());
    Mat A, Aeq;
    Vec b, beq;
    rows_to_matrix(std::move(rows), n, A, b);
    rows_to_matrix(std::move(eq), n, Aeq, beq);
    return SetSpec::polyhedron(A, b, Aeq, beq);
  }

  const auto* b1 = S1.get<BallData>();
  const auto* b2 = S2.get<BallData>();
  if (b1 && b2) return intersect_balls(*b1, *b2);

  for (const auto& [s, other] : {std::pair{S1, S2}, std::pair{S2, S1}}) {
    if (auto pt = singleton_point(s)) {
      if (distance(other, *pt) <= 1e-12) return SetSpec::point(*pt);
      throw Error(ErrorKind::Infeasible, "intersect: singleton outside the other set");
    }
  }
  throw Error(ErrorKind::Unsupported, std::string("intersect: no exact form for ") + to_string(S1.kind()) + " with " +
                                          to_string(S2.kind()));
}

// ---------------------------------------------------------------------------

SetSpec dilate(const SetSpec& S, double factor) {
  if (!(factor > 0.0)) throw Error(ErrorKind::Precondition, "dilate: factor must be positive");
  switch (S.kind()) {
    case SetKind::Polyhedron: {
      const auto& p = *S.get<PolyhedronData>();
      return SetSpec::polyhedron(p.A, factor * p.b, p.Aeq, factor * p.beq);
    }
    case SetKind::Ball: {
      const auto& b = *S.get<BallData>();
      return SetSpec::ball(factor * b.center, factor * b.radius);
    }
    case SetKind::Affine: {
      const auto& a = *S.get<AffineData>();
      return SetSpec::affine(factor * a.base, a.directions);
    }
    case SetKind::LevelSet: {
      const auto& L = *S.get<LevelSetData>();
      if (L.quadratic) {
        Quadratic q{L.quadratic->Q / (factor * factor), L.quadratic->q / factor, L.quadratic->c};
        return SetSpec::quadratic_level_set(q, L.sense);
      }
      auto g = L.g;
      auto grad = L.grad;
      return SetSpec::level_set(
          S.dim(), [g, factor](const Vec& x) { return g(x / factor); },
          [grad, factor](const Vec& x) -> Vec { return grad(x / factor) / factor; }, L.sense);
    }
    case SetKind::Translate: {
      const auto& t = *S.get<TranslateData>();
      return SetSpec::translate(dilate(*t.inner, factor), factor * t.shift);
    }
    case SetKind::Union: {
      std::vector<SetSpec> members;
      for (const auto& m : S.get<UnionData>()->members) members.push_back(dilate(m, factor));
      return SetSpec::union_of(std::move(members));
    }
    case SetKind::Epigraph: {
      const auto& e = *S.get<EpigraphData>();
      if (e.poly) {
        PolyFunction f = *e.poly;
        f.offsets *= factor;
        f.domain_b *= factor;
        return SetSpec::epigraph(std::move(f));
      }
      auto f = e.f;
      auto grad = e.grad;
      auto dom = e.in_domain;
      GradFn g2;
      if (grad) g2 = [grad, factor](const Vec& y) -> Vec { return grad(y / factor); };
      return SetSpec::epigraph(
          e.base_dim, [f, factor](const Vec& y) { return factor * f(y / factor); }, g2,
          [dom, factor](const Vec& y) { return dom(y / factor); });
    }
    case SetKind::Product: {
      std::vector<SetSpec> factors;
      for (const auto& f : S.get<ProductData>()->factors) factors.push_back(dilate(f, factor));
      return SetSpec::product(std::move(factors));
    }
  }
  throw Error(ErrorKind::Unsupported, "dilate: unknown variant");
}

std::string describe(const SetSpec& S) {
  std::ostringstream os;
  os << to_string(S.kind()) << "(dim=" << S.dim();
  switch (S.kind()) {
    case SetKind::Polyhedron: os << ", rows=" << S.get<PolyhedronData>()->A.rows() << "+" << S.get<PolyhedronData>()->Aeq.rows(); break;
    case SetKind::Ball: os << ", r=" << S.get<BallData>()->radius; break;
    case SetKind::Affine: os << ", span=" << S.get<AffineData>()->basis.cols(); break;
    case SetKind::Union: os << ", members=" << S.get<UnionData>()->members.size(); break;
    case SetKind::Product: os << ", factors=" << S.get<ProductData>()->factors.size(); break;
    default: break;
  }
  os << ")";
  return os.str();
}

}  // namespace tvx
