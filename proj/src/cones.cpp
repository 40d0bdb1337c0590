#include "tvx/cones.hpp"

#include <algorithm>
#include <cmath>

#include "tvx/sampling.hpp"

namespace tvx {

namespace {

using QVec = std::vector<mpq_class>;

mpz_class dot(const ZVec& a, const ZVec& b) {
  mpz_class s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool is_zero(const ZVec& v) {
  return std::all_of(v.begin(), v.end(), [](const mpz_class& x) { return sgn(x) == 0; });
}

void make_primitive(ZVec& v) {
  mpz_class g = 0;
  for (const auto& x : v) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  if (g == 0 || g == 1) return;
  for (auto& x : v) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
}

ZVec neg(ZVec v) {
  for (auto& x : v) x = -x;
  return v;
}

ZVec from_rational(const QVec& q) {
  mpz_class l = 1;
  for (const auto& x : q) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
  ZVec out(q.size());
  for (size_t i = 0; i < q.size(); ++i) {
    mpq_class s = q[i] * l;
    out[i] = s.get_num();
  }
  make_primitive(out);
  return out;
}

/// Rank of a set of integer rows over Q.
int rank_of(const std::vector<const ZVec*>& rows, size_t n) {
  std::vector<QVec> m;
  m.reserve(rows.size());
  for (const auto* r : rows) m.emplace_back(r->begin(), r->end());
  int rank = 0;
  for (size_t col = 0; col < n && rank < static_cast<int>(m.size()); ++col) {
    size_t piv = static_cast<size_t>(rank);
    while (piv < m.size() && sgn(m[piv][col]) == 0) ++piv;
    if (piv == m.size()) continue;
    std::swap(m[piv], m[static_cast<size_t>(rank)]);
    const QVec& p = m[static_cast<size_t>(rank)];
    for (size_t r = static_cast<size_t>(rank) + 1; r < m.size(); ++r) {
      if (sgn(m[r][col]) == 0) continue;
      const mpq_class f = m[r][col] / p[col];
      for (size_t c = col; c < n; ++c) m[r][c] -= f * p[c];
    }
    ++rank;
  }
  return rank;
}

struct Ray {
  ZVec v;
  std::vector<bool> tight;  // indexed by processed constraint
};

/// Double description: generators of {v : a.v <= 0 for all a in normals}.
ConeGenerators double_description(size_t n, const std::vector<ZVec>& normals, int ray_cap) {
  std::vector<ZVec> lin;
  for (size_t i = 0; i < n; ++i) {
    ZVec e(n, 0);
    e[i] = 1;
    lin.push_back(std::move(e));
  }
  std::vector<Ray> rays;
  std::vector<const ZVec*> processed;

  for (size_t k = 0; k < normals.size(); ++k) {
    const ZVec& a = normals[k];
    if (is_zero(a)) {
      processed.push_back(&a);
      for (auto& r : rays) r.tight.push_back(true);
      continue;
    }
    auto it = std::find_if(lin.begin(), lin.end(), [&](const ZVec& l) { return sgn(dot(a, l)) != 0; });
    if (it != lin.end()) {
      ZVec l = *it;
      lin.erase(it);
      mpz_class al = dot(a, l);
      if (al > 0) {
        l = neg(std::move(l));
        al = -al;
      }
      const mpz_class s = -al;
      const auto eliminate = [&](ZVec& x) {
        const mpz_class ax = dot(a, x);
        if (sgn(ax) == 0) return;
        for (size_t i = 0; i < n; ++i) x[i] = s * x[i] + ax * l[i];
        make_primitive(x);
      };
      for (auto& x : lin) eliminate(x);
      for (auto& r : rays) {
        eliminate(r.v);
        r.tight.push_back(true);
      }
      Ray nr{l, std::vector<bool>(processed.size(), true)};
      nr.tight.push_back(false);
      rays.push_back(std::move(nr));
      processed.push_back(&a);
      continue;
    }

    std::vector<Ray> pos, zero, negs;
    std::vector<mpz_class> pos_val, neg_val;
    for (auto& r : rays) {
      const mpz_class v = dot(a, r.v);
      if (v > 0) {
        pos.push_back(std::move(r));
        pos_val.push_back(v);
      } else if (v < 0) {
        negs.push_back(std::move(r));
        neg_val.push_back(v);
      } else {
        zero.push_back(std::move(r));
      }
    }
    const int target = static_cast<int>(n) - static_cast<int>(lin.size()) - 2;
    std::vector<Ray> next;
    for (auto& r : zero) {
      r.tight.push_back(true);
      next.push_back(std::move(r));
    }
    for (const auto& r : negs) {
      next.push_back(r);
      next.back().tight.push_back(false);
    }
    for (size_t i = 0; i < pos.size(); ++i) {
      for (size_t j = 0; j < negs.size(); ++j) {
        std::vector<const ZVec*> common;
        std::vector<bool> tight(processed.size() + 1, false);
        for (size_t c = 0; c < processed.size(); ++c) {
          if (pos[i].tight[c] && negs[j].tight[c]) {
            common.push_back(processed[c]);
            tight[c] = true;
          }
        }
        if (target < 0) continue;
        if (static_cast<int>(common.size()) < target) continue;
        if (rank_of(common, n) != target) continue;
        ZVec v(n);
        for (size_t c = 0; c < n; ++c) v[c] = pos_val[i] * negs[j].v[c] - neg_val[j] * pos[i].v[c];
        make_primitive(v);
        if (is_zero(v)) continue;
        tight[processed.size()] = true;
        next.push_back({std::move(v), std::move(tight)});
        if (static_cast<int>(next.size()) > ray_cap)
          throw Error(ErrorKind::Representation, "cone arithmetic exceeded the ray cap of " + std::to_string(ray_cap));
      }
    }
    rays = std::move(next);
    processed.push_back(&a);
  }

  ConeGenerators out;
  out.lineality = std::move(lin);
  for (auto& r : rays) out.rays.push_back(std::move(r.v));
  return out;
}

/// RREF lineality basis, rays reduced modulo it, primitive, sorted, deduplicated.
ConeGenerators canonicalize(size_t n, ConeGenerators g) {
  std::vector<QVec> m;
  for (const auto& l : g.lineality) m.emplace_back(l.begin(), l.end());
  std::vector<size_t> pivots;
  size_t rank = 0;
  for (size_t col = 0; col < n && rank < m.size(); ++col) {
    size_t piv = rank;
    while (piv < m.size() && sgn(m[piv][col]) == 0) ++piv;
    if (piv == m.size()) continue;
    std::swap(m[piv], m[rank]);
    const mpq_class p = m[rank][col];
    for (auto& x : m[rank]) x /= p;
    for (size_t r = 0; r < m.size(); ++r) {
      if (r == rank || sgn(m[r][col]) == 0) continue;
      const mpq_class f = m[r][col];
      for (size_t c = 0; c < n; ++c) m[r][c] -= f * m[rank][c];
    }
    pivots.push_back(col);
    ++rank;
  }
  m.resize(rank);

  ConeGenerators out;
  for (const auto& row : m) out.lineality.push_back(from_rational(row));
  for (const auto& r : g.rays) {
    QVec q(r.begin(), r.end());
    for (size_t i = 0; i < rank; ++i) {
      const mpq_class f = q[pivots[i]];
      if (sgn(f) == 0) continue;
      for (size_t c = 0; c < n; ++c) q[c] -= f * m[i][c];
    }
    ZVec z = from_rational(q);
    if (!is_zero(z)) out.rays.push_back(std::move(z));
  }
  std::sort(out.rays.begin(), out.rays.end());
  out.rays.erase(std::unique(out.rays.begin(), out.rays.end()), out.rays.end());
  return out;
}

std::vector<ZVec> expand(const ConeGenerators& g) {
  std::vector<ZVec> out = g.rays;
  for (const auto& l : g.lineality) {
    out.push_back(l);
    out.push_back(neg(l));
  }
  return out;
}

Vec unit_double(const ZVec& z) {
  Vec v = to_double(z);
  const double n = v.norm();
  return n > 0 ? Vec(v / n) : v;
}

}  // namespace

ZVec to_exact(const Vec& v) {
  QVec q(static_cast<size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw Error(ErrorKind::Precondition, "cone input must be finite");
    q[static_cast<size_t>(i)] = mpq_class(v[i]);
  }
  return from_rational(q);
}

Vec to_double(const ZVec& v) {
  // Scale by the largest entry first so huge primitive integers stay in range.
  mpz_class big = 0;
  for (const auto& x : v) big = std::max<mpz_class>(big, abs(x));
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = big == 0 ? 0.0 : mpq_class(v[i], big).get_d();
  }
  return out;
}

PolyCone PolyCone::from_exact_halfspaces(int dim, const std::vector<ZVec>& normals, int ray_cap) {
  const size_t n = static_cast<size_t>(dim);
  for (const auto& a : normals)
    if (a.size() != n) throw Error(ErrorKind::DimensionMismatch, "cone halfspace length");
  ConeGenerators gens = canonicalize(n, double_description(n, normals, ray_cap));
  ConeGenerators pol = canonicalize(n, double_description(n, expand(gens), ray_cap));
  return PolyCone(dim, std::move(gens), std::move(pol));
}

PolyCone PolyCone::from_exact_generators(int dim, const std::vector<ZVec>& gens_in, int ray_cap) {
  const size_t n = static_cast<size_t>(dim);
  for (const auto& g : gens_in)
    if (g.size() != n) throw Error(ErrorKind::DimensionMismatch, "cone generator length");
  ConeGenerators pol = canonicalize(n, double_description(n, gens_in, ray_cap));
  ConeGenerators gens = canonicalize(n, double_description(n, expand(pol), ray_cap));
  return PolyCone(dim, std::move(gens), std::move(pol));
}

PolyCone PolyCone::from_generators(int dim, const std::vector<Vec>& gens, int ray_cap) {
  std::vector<ZVec> z;
  for (const auto& g : gens) {
    require_dim(g, dim, "PolyCone::from_generators");
    z.push_back(to_exact(g));
  }
  return from_exact_generators(dim, z, ray_cap);
}

PolyCone PolyCone::from_halfspaces(int dim, const std::vector<Vec>& normals, const std::vector<Vec>& equalities,
                                   int ray_cap) {
  std::vector<ZVec> z;
  for (const auto& a : normals) {
    require_dim(a, dim, "PolyCone::from_halfspaces");
    z.push_back(to_exact(a));
  }
  for (const auto& e : equalities) {
    require_dim(e, dim, "PolyCone::from_halfspaces");
    z.push_back(to_exact(e));
    z.push_back(neg(z.back()));
  }
  return from_exact_halfspaces(dim, z, ray_cap);
}

PolyCone PolyCone::full(int dim) { return from_exact_halfspaces(dim, {}); }

PolyCone PolyCone::zero(int dim) { return from_exact_generators(dim, {}); }

std::vector<Vec> PolyCone::generators() const {
  std::vector<Vec> out;
  for (const auto& z : expand(gens_)) out.push_back(unit_double(z));
  return out;
}

std::vector<Vec> PolyCone::halfspaces() const {
  std::vector<Vec> out;
  for (const auto& z : expand(polar_)) out.push_back(unit_double(z));
  return out;
}

std::vector<Vec> PolyCone::equalities() const {
  std::vector<Vec> out;
  for (const auto& z : polar_.lineality) out.push_back(unit_double(z));
  return out;
}

std::vector<Vec> PolyCone::facets() const {
  std::vector<Vec> out;
  for (const auto& z : polar_.rays) out.push_back(unit_double(z));
  return out;
}

int PolyCone::span_dim() const { return dim_ - static_cast<int>(polar_.lineality.size()); }

bool PolyCone::contains(const Vec& v, double tol) const {
  require_dim(v, dim_, "PolyCone::contains");
  const double scale = std::max(1.0, v.norm());
  for (const auto& h : facets())
    if (h.dot(v) > tol * scale) return false;
  for (const auto& e : equalities())
    if (std::abs(e.dot(v)) > tol * scale) return false;
  return true;
}

bool PolyCone::contains_exact(const ZVec& v) const {
  for (const auto& h : polar_.rays)
    if (dot(h, v) > 0) return false;
  for (const auto& e : polar_.lineality)
    if (sgn(dot(e, v)) != 0) return false;
  return true;
}

bool PolyCone::subset_of(const PolyCone& other) const {
  if (dim_ != other.dim_) throw Error(ErrorKind::DimensionMismatch, "cone containment");
  for (const auto& g : expand(gens_))
    if (!other.contains_exact(g)) return false;
  return true;
}

PolyCone polar(const PolyCone& C) { return PolyCone(C.dim_, C.polar_, C.gens_); }

PolyCone negate(const PolyCone& C) {
  std::vector<ZVec> g;
  for (const auto& z : expand(C.exact_generators())) g.push_back(neg(z));
  return PolyCone::from_exact_generators(C.dim(), g);
}

PolyCone cone_sum(const PolyCone& C1, const PolyCone& C2) {
  if (C1.dim() != C2.dim()) throw Error(ErrorKind::DimensionMismatch, "cone_sum");
  std::vector<ZVec> g = expand(C1.exact_generators());
  for (auto& z : expand(C2.exact_generators())) g.push_back(std::move(z));
  return PolyCone::from_exact_generators(C1.dim(), g);
}

PolyCone cone_diff(const PolyCone& C1, const PolyCone& C2) {
  if (C1.dim() != C2.dim()) throw Error(ErrorKind::DimensionMismatch, "cone_diff");
  std::vector<ZVec> g = expand(C1.exact_generators());
  for (auto& z : expand(C2.exact_generators())) g.push_back(neg(std::move(z)));
  return PolyCone::from_exact_generators(C1.dim(), g);
}

PolyCone cone_intersect(const PolyCone& C1, const PolyCone& C2) {
  if (C1.dim() != C2.dim()) throw Error(ErrorKind::DimensionMismatch, "cone_intersect");
  std::vector<ZVec> h = expand(C1.exact_polar());
  for (auto& z : expand(C2.exact_polar())) h.push_back(std::move(z));
  return PolyCone::from_exact_halfspaces(C1.dim(), h);
}

PolyCone cone_product(const PolyCone& C1, const PolyCone& C2) {
  const size_t n1 = static_cast<size_t>(C1.dim());
  const size_t n = n1 + static_cast<size_t>(C2.dim());
  std::vector<ZVec> g;
  for (const auto& z : expand(C1.exact_generators())) {
    ZVec v(n, 0);
    std::copy(z.begin(), z.end(), v.begin());
    g.push_back(std::move(v));
  }
  for (const auto& z : expand(C2.exact_generators())) {
    ZVec v(n, 0);
    std::copy(z.begin(), z.end(), v.begin() + static_cast<std::ptrdiff_t>(n1));
    g.push_back(std::move(v));
  }
  return PolyCone::from_exact_generators(static_cast<int>(n), g);
}

PolyCone nonpositive_halfline() { return PolyCone::from_exact_generators(1, {ZVec{mpz_class(-1)}}); }

DensityResult is_dense_difference(const PolyCone& C1, const PolyCone& C2) {
  const PolyCone common = cone_intersect(polar(C1), negate(polar(C2)));
  if (common.is_zero()) return {true, std::nullopt};
  return {false, common.generators().front()};
}

Vec project_onto_cone(const PolyCone& C, const Vec& v) {
  require_dim(v, C.dim(), "project_onto_cone");
  if (C.is_full()) return v;
  if (C.is_zero()) return Vec::Zero(C.dim());
  const auto facets = C.facets();
  const auto eqs = C.equalities();
  Mat A(static_cast<Eigen::Index>(facets.size()), C.dim());
  for (size_t i = 0; i < facets.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = facets[i].transpose();
  Mat Aeq(static_cast<Eigen::Index>(eqs.size()), C.dim());
  for (size_t i = 0; i < eqs.size(); ++i) Aeq.row(static_cast<Eigen::Index>(i)) = eqs[i].transpose();
  return project_polyhedron(v, A, Vec::Zero(A.rows()), Aeq, Vec::Zero(Aeq.rows()));
}

double distance_to_cone(const PolyCone& C, const Vec& v) { return (project_onto_cone(C, v) - v).norm(); }

// ---------------------------------------------------------------------------

PolyCone tangent_cone_polyhedral(const SetSpec& S, const Vec& x0) {
  require_dim(x0, S.dim(), "tangent_cone_polyhedral");
  const auto p = polyhedral_form(S);
  if (!p) throw Error(ErrorKind::Unsupported, "tangent_cone_polyhedral: set is not polyhedral");
  std::vector<Vec> active, eqs;
  for (Eigen::Index i = 0; i < p->A.rows(); ++i) {
    const double slack = p->A.row(i).dot(x0) - p->b[i];
    if (slack > kActivityTol) throw Error(ErrorKind::Precondition, "tangent_cone_polyhedral: x0 is not a member");
    if (std::abs(slack) <= kActivityTol) active.push_back(p->A.row(i).transpose());
  }
  for (Eigen::Index i = 0; i < p->Aeq.rows(); ++i) {
    if (std::abs(p->Aeq.row(i).dot(x0) - p->beq[i]) > kActivityTol)
      throw Error(ErrorKind::Precondition, "tangent_cone_polyhedral: x0 is not a member");
    eqs.push_back(p->Aeq.row(i).transpose());
  }
  return PolyCone::from_halfspaces(S.dim(), active, eqs);
}

PolyCone clarke_cone_convex(const SetSpec& S, const Vec& x0) {
  require_dim(x0, S.dim(), "clarke_cone_convex");
  if (polyhedral_form(S)) return tangent_cone_polyhedral(S, x0);
  switch (S.kind()) {
    case SetKind::Ball: {
      const auto& b = *S.get<BallData>();
      const Vec d = x0 - b.center;
      const double r = d.norm();
      if (r > b.radius + kActivityTol) throw Error(ErrorKind::Precondition, "clarke_cone_convex: x0 is not a member");
      if (b.radius == 0.0) return PolyCone::zero(S.dim());
      if (r < b.radius - kActivityTol) return PolyCone::full(S.dim());
      return PolyCone::from_halfspaces(S.dim(), {d});
    }
    case SetKind::Translate: {
      const auto& t = *S.get<TranslateData>();
      return clarke_cone_convex(*t.inner, x0 - t.shift);
    }
    case SetKind::Product: {
      const auto& p = *S.get<ProductData>();
      std::optional<PolyCone> acc;
      Eigen::Index c = 0;
      for (const auto& f : p.factors) {
        PolyCone k = clarke_cone_convex(f, x0.segment(c, f.dim()));
        acc = acc ? cone_product(*acc, k) : k;
        c += f.dim();
      }
      return *acc;
    }
    default: break;
  }
  throw Error(ErrorKind::Unsupported, std::string("clarke_cone_convex: no exact cone for ") + to_string(S.kind()));
}

const char* to_string(Membership m) {
  switch (m) {
    case Membership::In: return "IN";
    case Membership::Out: return "OUT";
    case Membership::Undecided: return "UNDECIDED";
  }
  return "?";
}

std::vector<double> tangent_grid(const SampledConeOptions& opt) {
  std::vector<double> grid;
  for (double t = opt.t0; t >= opt.t_floor; t *= 0.5) grid.push_back(t);
  return grid;
}

DirectionProfile classify_direction(const SetSpec& S, const Vec& x0, const Vec& v, const SampledConeOptions& opt) {
  return classify_direction([&S](const Vec& x) { return distance(S, x); }, x0, v, opt);
}

DirectionProfile classify_direction(const std::function<double(const Vec&)>& dist, const Vec& x0, const Vec& v,
                                    const SampledConeOptions& opt) {
  const auto grid = tangent_grid(opt);
  const Vec u = v / v.norm();
  DirectionProfile out;
  double lo = kInf;
  for (const double t : grid) {
    const double r = dist(x0 + t * u) / t;
    out.residuals.push_back(r);
    lo = std::min(lo, r);
  }
  if (lo <= opt.tol) out.bouligand = Membership::In;
  else if (lo >= 10.0 * opt.tol) out.bouligand = Membership::Out;

  const size_t tail = std::max<size_t>(3, grid.size() / 4);
  const size_t from = grid.size() > tail ? grid.size() - tail : 0;
  double tail_max = 0.0, tail_min = kInf;
  for (size_t j = from; j < grid.size(); ++j) {
    tail_max = std::max(tail_max, out.residuals[j]);
    tail_min = std::min(tail_min, out.residuals[j]);
  }
  if (tail_max <= opt.tol) out.derivable = Membership::In;
  else if (tail_min >= 10.0 * opt.tol) out.derivable = Membership::Out;
  return out;
}

SampledCone tangent_cone_sampled(const SetSpec& S, const Vec& x0, const std::vector<Vec>& directions,
                                 const SampledConeOptions& opt) {
  require_dim(x0, S.dim(), "tangent_cone_sampled");
  if (distance(S, x0) > 1e-9) throw Error(ErrorKind::Precondition, "tangent_cone_sampled: x0 is not a member");
  SampledCone out;
  out.basepoint = x0;
  out.tgrid = tangent_grid(opt);
  for (const auto& v : directions) {
    auto prof = classify_direction(S, x0, v, opt);
    out.directions.push_back(v / v.norm());
    out.residuals.push_back(std::move(prof.residuals));
    out.bouligand.push_back(prof.bouligand);
    out.derivable.push_back(prof.derivable);
    if (prof.bouligand == Membership::Undecided) ++out.undecided;
  }
  if (!directions.empty() && out.undecided == static_cast<int>(directions.size()))
    throw Error(ErrorKind::NonConvergence, "tangent_cone_sampled: every direction undecided");
  return out;
}

SampledCone tangent_cone_sampled(const SetSpec& S, const Vec& x0, int budget, const SampledConeOptions& opt) {
  if (budget <= 0) throw Error(ErrorKind::Configuration, "tangent_cone_sampled: budget must be positive");
  return tangent_cone_sampled(S, x0, direction_net(S.dim(), budget), opt);
}

}  // namespace tvx
