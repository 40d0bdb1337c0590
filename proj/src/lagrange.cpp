#include "tvx/lagrange.hpp"

#include <cmath>

#include "tvx/error.hpp"
#include "tvx/sampling.hpp"

namespace tvx {

namespace {

constexpr double kCheckTol = 1e-9;

Vec join(const Vec& x, double r) {
  Vec v(x.size() + 1);
  v << x, r;
  return v;
}

Vec unit(int dim, int i) {
  Vec e = Vec::Zero(dim);
  e[i] = 1.0;
  return e;
}

// Random conic combinations of the generators (unit length when nonzero).
std::vector<Vec> cone_samples(const PolyCone& C, int count, Rng& rng) {
  const auto gens = C.generators();
  std::vector<Vec> out;
  if (gens.empty()) return out;
  for (int k = 0; k < count; ++k) {
    Vec v = Vec::Zero(C.dim());
    for (const auto& g : gens) v += rng.uniform() * g;
    const double nv = v.norm();
    if (nv > 1e-12) out.push_back(v / nv);
  }
  return out;
}

void validate_cone(const SetSpec& S, const Vec& x, const PolyCone& C, const char* what) {
  for (const auto& g : C.generators()) {
    if (classify_direction(S, x, g).bouligand == Membership::Out)
      throw Error(ErrorKind::Precondition, std::string("multiplier_rule: supplied cone is not tangent to ") + what);
  }
}

// min s over (v, s) ∈ C_epi, v ∈ C_S, |v_i| <= 1, s >= -1.
std::optional<Vec> descent_witness(const PolyCone& Cepi, const PolyCone& CS) {
  const int n = CS.dim();
  const auto he = Cepi.halfspaces();
  const auto hs = CS.halfspaces();
  LpProblem lp;
  lp.c = Vec::Zero(n + 1);
  lp.c[n] = 1.0;
  lp.A_ub = Mat::Zero(static_cast<Eigen::Index>(he.size() + hs.size()), n + 1);
  lp.b_ub = Vec::Zero(lp.A_ub.rows());
  Eigen::Index r = 0;
  for (const auto& h : he) lp.A_ub.row(r++) = h.transpose();
  for (const auto& h : hs) lp.A_ub.row(r++).head(n) = h.transpose();
  lp.lower = Vec::Constant(n + 1, -1.0);
  lp.upper = Vec::Constant(n + 1, 1.0);
  lp.upper[n] = 0.0;
  const auto res = lp_solve(lp);
  if (!res.optimal() || res.x[n] > -1e-9) return std::nullopt;
  return res.x;
}

MultiplierOutcome rule(const OptProblem& p, const PolyCone& Cepi, const PolyCone& CS, const MultiplierOptions& opt,
                       const char* dense_message) {
  const int n = p.S.dim();
  if (CS.dim() != n || Cepi.dim() != n + 1)
    throw Error(ErrorKind::DimensionMismatch, "multiplier_rule: cone dimensions do not match the problem");
  if (opt.validate_cones) {
    validate_cone(p.epi, p.base(), Cepi, "epi f");
    validate_cone(p.S, p.x0, CS, "S");
  }
  const PolyCone CSt = cone_product(CS, nonpositive_halfline());
  MultiplierOutcome out;
  const auto density = is_dense_difference(Cepi, CSt);
  if (density.dense) {
    DenseVerdict v;
    v.message = dense_message;
    v.descent = descent_witness(Cepi, CS);
    if (opt.corroborate) {
      try {
        const SetSpec lowered =
            SetSpec::product({p.S, SetSpec::halfspace(Vec::Constant(1, 1.0), p.fx0)});
        v.corroboration = estimate_subtransversality_constant(p.epi, lowered, p.base(), opt.corroboration_delta);
      } catch (const Error&) {
        // Corroboration is optional evidence; unsupported projections skip it.
      }
    }
    out.dense = v;
    return out;
  }
  // -(xi, eta) lies in polar(C_epi) ∩ -polar(C_S x (-inf, 0]).
  const PolyCone W = cone_intersect(polar(Cepi), negate(polar(CSt)));
  Vec w = Vec::Zero(n + 1);
  for (const auto& r : W.exact_generators().rays) w += to_double(r).normalized();
  if (w.norm() < 1e-12) {
    if (!W.exact_generators().lineality.empty()) w = to_double(W.exact_generators().lineality.front());
    else if (density.witness) w = *density.witness;
  }
  MultiplierPair m;
  const Vec neg = -w;
  if (neg[n] > 1e-12) {
    m.xi = neg.head(n) / neg[n];
    m.eta = 1.0;
  } else {
    m.xi = neg.head(n).normalized();
    m.eta = 0.0;
  }
  m.xi += Vec::Zero(n);
  out.checks = verify_multiplier(m, Cepi, CS);
  if (!out.checks.all())
    throw Error(ErrorKind::NonConvergence, "multiplier_rule: separating pair failed re-verification");
  out.pair = m;
  return out;
}

}  // namespace

std::optional<Separation> separate_cones(const PolyCone& C, const Vec& dir, double radius) {
  require_dim(dir, C.dim(), "separate_cones");
  if (!(radius > 0.0)) throw Error(ErrorKind::Precondition, "separate_cones: radius must be positive");
  if (C.is_full()) return std::nullopt;
  const Vec nvec = dir - project_onto_cone(C, dir);
  const double nn = nvec.norm();
  if (!(nn > radius)) return std::nullopt;
  Separation s;
  s.xi = -nvec / nn + Vec::Zero(nvec.size());
  for (const auto& g : C.generators())
    if (s.xi.dot(g) < -kCheckTol) return std::nullopt;
  s.margin = kInf;
  for (const auto& u : direction_net(C.dim(), 64)) {
    const Vec d = dir + radius * u;
    s.margin = std::min(s.margin, -s.xi.dot(d) / d.norm());
  }
  if (!(s.margin >= 1e-9)) return std::nullopt;
  return s;
}

OptProblem OptProblem::make(SetSpec epi, SetSpec S, Vec x0, double fx0) {
  if (epi.dim() != S.dim() + 1) throw Error(ErrorKind::DimensionMismatch, "OptProblem: epi f must live in X x R");
  require_dim(x0, S.dim(), "x0");
  if (!member(S, x0)) throw Error(ErrorKind::Precondition, "OptProblem: x0 is not in S");
  if (!member(epi, join(x0, fx0))) throw Error(ErrorKind::Precondition, "OptProblem: (x0, f(x0)) is not in epi f");
  return OptProblem{std::move(epi), std::move(S), std::move(x0), fx0};
}

OptProblem OptProblem::make(const PolyFunction& f, SetSpec S, Vec x0) {
  const double v = f.value(x0);
  return make(SetSpec::epigraph(f), std::move(S), std::move(x0), v);
}

Vec OptProblem::base() const { return join(x0, fx0); }

MultiplierChecks verify_multiplier(const MultiplierPair& m, const PolyCone& Cepi, const PolyCone& CS, int samples,
                                   std::uint64_t seed) {
  MultiplierChecks c;
  c.nonzero = m.xi.norm() > 0.0 || m.eta != 0.0;
  c.eta_binary = m.eta == 0.0 || m.eta == 1.0;
  Rng rng(seed);
  auto vs = CS.generators();
  for (const auto& v : cone_samples(CS, samples, rng)) vs.push_back(v);
  auto ws = Cepi.generators();
  for (const auto& w : cone_samples(Cepi, samples, rng)) ws.push_back(w);
  c.constraint = true;
  for (const auto& v : vs) c.constraint = c.constraint && m.xi.dot(v) <= kCheckTol;
  c.objective = true;
  const Eigen::Index n = m.xi.size();
  for (const auto& w : ws) c.objective = c.objective && m.xi.dot(w.head(n)) + m.eta * w[n] >= -kCheckTol;
  c.samples = samples;
  return c;
}

MultiplierOutcome multiplier_rule(const OptProblem& p, const PolyCone& Cepi, const PolyCone& CS,
                                  const MultiplierOptions& opt) {
  return rule(p, Cepi, CS, opt, "not subtransversal: epi f and S x (-inf, f(x0)] at (x0, f(x0))");
}

MultiplierOutcome multiplier_rule_massive(const OptProblem& p, const MultiplierOptions& opt) {
  const PolyCone Cepi = clarke_cone_convex(p.epi, p.base());
  const PolyCone CS = clarke_cone_convex(p.S, p.x0);
  MultiplierOptions o = opt;
  o.validate_cones = false;
  return rule(p, Cepi, CS, o, "optimality contradiction: x0 is not a local minimizer");
}

std::optional<double> kkt_residual(const Vec& c, const SetSpec& S, const Vec& x0, const MultiplierPair& m) {
  const auto poly = polyhedral_form(S);
  if (!poly) throw Error(ErrorKind::Unsupported, "kkt_residual: S must be polyhedral");
  LpProblem lp;
  lp.c = c;
  lp.A_ub = poly->A;
  lp.b_ub = poly->b;
  lp.A_eq = poly->Aeq;
  lp.b_eq = poly->beq;
  const auto res = lp_solve(lp);
  if (!res.optimal() || std::abs(res.value - c.dot(x0)) > 1e-9 * (1.0 + std::abs(res.value))) return std::nullopt;
  Vec g = Vec::Zero(c.size());
  if (poly->A.rows() > 0) g += poly->A.transpose() * res.dual_ub;
  if (poly->Aeq.rows() > 0) g += poly->Aeq.transpose() * res.dual_eq;
  return (m.xi - g).norm();
}

StrongMinimum strong_minimum_transform(const OptProblem& p, int directions) {
  const auto* e = p.epi.get<EpigraphData>();
  if (!e) throw Error(ErrorKind::Unsupported, "strong_minimum_transform: objective must be an epigraph");
  const Vec x0 = p.x0;
  const ScalarFn f = e->f;
  const GradFn grad = e->grad;
  ScalarFn g = [f, x0](const Vec& x) { return f(x) + (x - x0).squaredNorm(); };
  GradFn dg;
  if (grad) dg = [grad, x0](const Vec& x) { return Vec(grad(x) + 2.0 * (x - x0)); };
  StrongMinimum out{OptProblem::make(SetSpec::epigraph(e->base_dim, g, dg, e->in_domain), p.S, p.x0, p.fx0), 0.0,
                    directions};
  int same = 0;
  const Vec base = p.base();
  for (const auto& v : direction_net(p.epi.dim(), directions)) {
    const auto a = classify_direction(p.epi, base, v).bouligand;
    const auto b = classify_direction(out.problem.epi, base, v).bouligand;
    if (a == b) ++same;
  }
  out.cone_agreement = directions > 0 ? static_cast<double>(same) / directions : 1.0;
  return out;
}

QualificationReport qualification_equivalences(const SetSpec& epi1, const SetSpec& epi2, const Vec& x0) {
  const auto* e1 = epi1.get<EpigraphData>();
  const auto* e2 = epi2.get<EpigraphData>();
  if (!e1 || !e2 || !e1->poly || !e2->poly)
    throw Error(ErrorKind::Unsupported, "qualification_equivalences: polyhedral epigraphs required");
  const int n = e1->base_dim;
  if (e2->base_dim != n) throw Error(ErrorKind::DimensionMismatch, "qualification_equivalences: dimensions differ");
  require_dim(x0, n, "x0");
  const PolyCone T1 = clarke_cone_convex(epi1, join(x0, e1->poly->value(x0)));
  const PolyCone T2 = clarke_cone_convex(epi2, join(x0, e2->poly->value(x0)));

  QualificationReport rep;
  rep.epigraph_density = is_dense_difference(T1, T2).dense;

  // Embeddings of X x R into X x R x R: (v, s) -> (v, s, 0) or (v, 0, s).
  const auto embed = [n](const Vec& g, int slot) {
    Vec out = Vec::Zero(n + 2);
    out.head(n) = g.head(n);
    out[n + slot] = g[n];
    return out;
  };
  std::vector<Vec> l1, l2;
  for (const auto& g : T1.generators()) l1.push_back(embed(g, 0));
  for (const auto& g : T2.generators()) l2.push_back(embed(g, 1));
  l1.push_back(unit(n + 2, n + 1));
  l1.push_back(-unit(n + 2, n + 1));
  l2.push_back(unit(n + 2, n));
  l2.push_back(-unit(n + 2, n));
  rep.lift_density =
      is_dense_difference(PolyCone::from_generators(n + 2, l1), PolyCone::from_generators(n + 2, l2)).dense;

  std::vector<Vec> n1, n2;
  for (const auto& g : polar(T1).generators()) n1.push_back(embed(g, 0));
  for (const auto& g : polar(T2).generators()) n2.push_back(embed(g, 1));
  const PolyCone N1 = PolyCone::from_generators(n + 2, n1);
  const PolyCone N2 = PolyCone::from_generators(n + 2, n2);
  rep.normal_cones = cone_intersect(N1, negate(N2)).is_zero();

  // Singular subdifferential: {x* : (x*, 0) ∈ N_epi f}.
  const PolyCone level = PolyCone::from_halfspaces(n + 1, {}, {unit(n + 1, n)});
  const auto singular = [&](const PolyCone& T) {
    std::vector<Vec> gens;
    for (const auto& g : cone_intersect(polar(T), level).generators()) gens.push_back(g.head(n));
    return PolyCone::from_generators(n, gens);
  };
  rep.singular1 = singular(T1);
  rep.singular2 = singular(T2);
  rep.singular = cone_intersect(rep.singular1, negate(rep.singular2)).is_zero();
  return rep;
}

}  // namespace tvx
