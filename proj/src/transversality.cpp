#include "tvx/transversality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tvx {

const char* to_string(Notion n) {
  switch (n) {
    case Notion::Transversal: return "transversal";
    case Notion::TangentiallyTransversal: return "tangentially_transversal";
    case Notion::Subtransversal: return "subtransversal";
    case Notion::CoveringSufficient: return "covering_sufficient";
    case Notion::MassiveDense: return "massive_dense";
  }
  return "?";
}

const char* to_string(CertStatus s) {
  switch (s) {
    case CertStatus::Certified: return "CERTIFIED";
    case CertStatus::Refuted: return "REFUTED";
    case CertStatus::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

namespace {

Vec proj(const SetSpec& S, const Vec& x) { return project_approx(S, x).point; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::vector<PointPair> sample_pairs(const SetSpec& A, const SetSpec& B, const Vec& x0, double delta, int count,
                                    std::uint64_t seed) {
  if (A.dim() != B.dim() || x0.size() != A.dim()) throw Error(ErrorKind::DimensionMismatch, "sample_pairs");
  Rng rng(seed);
  std::vector<PointPair> out;
  for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < 20 * count + 20; ++attempt) {
    PointPair p;
    if (attempt % 3 == 0) {
      const Vec z = rng.in_ball_log_radius(x0, 0.5 * delta, 1e-6);
      p = {proj(A, z), proj(B, z)};
    } else if (attempt % 3 == 1) {
      // Nearest-point pair: both points sit on the boundaries when the sets
      // only touch, which is where linear rates break down.
      const Vec z = rng.in_ball_log_radius(x0, 0.5 * delta, 1e-6);
      const Vec a = proj(A, z);
      p = {a, proj(B, a)};
    } else {
      const Vec za = rng.in_ball_log_radius(x0, 0.5 * delta, 1e-6);
      const Vec zb = rng.in_ball_log_radius(x0, 0.5 * delta, 1e-6);
      p = {proj(A, za), proj(B, zb)};
    }
    if ((p.xA - x0).norm() > delta || (p.xB - x0).norm() > delta) continue;
    if ((p.xA - p.xB).norm() <= 1e-14) continue;
    out.push_back(std::move(p));
  }
  return out;
}

Vec dykstra(const std::vector<SetSpec>& sets, const Vec& x, int iters, double tol) {
  const size_t m = sets.size();
  std::vector<Vec> incr(m, Vec::Zero(x.size()));
  Vec y = x;
  for (int it = 0; it < iters; ++it) {
    const Vec prev = y;
    for (size_t i = 0; i < m; ++i) {
      const Vec z = y + incr[i];
      const Vec p = project(sets[i], z);
      incr[i] = z - p;
      y = p;
    }
    if ((y - prev).norm() <= tol * (1.0 + y.norm())) break;
  }
  return y;
}

IntersectionOracle::IntersectionOracle(const SetSpec& A, const SetSpec& B) : sets_{A, B} {
  try {
    forward_ = intersect(A, B);
    backward_ = intersect(B, A);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Unsupported) throw;
    forward_.reset();
    backward_.reset();
    if (!(A.convex_exact() && B.convex_exact()))
      throw Error(ErrorKind::Unsupported, "intersection oracle unavailable for nonconvex sets without exact form");
  }
}

IntersectionDistance IntersectionOracle::distance(const Vec& x) const {
  if (forward_) return {std::min(tvx::distance(*forward_, x), tvx::distance(*backward_, x)), false};
  return {(dykstra(sets_, x) - x).norm(), true};
}

Vec IntersectionOracle::project(const Vec& x) const {
  if (forward_) {
    const Vec a = project_approx(*forward_, x).point;
    const Vec b = project_approx(*backward_, x).point;
    return (b - x).norm() < (a - x).norm() ? b : a;
  }
  return dykstra(sets_, x);
}

// ---------------------------------------------------------------------------

namespace {

struct Translated {
  Mat A;
  Vec b;
  Mat Aeq;
  Vec beq;
};

/// Rows of {y : y + shift ∈ P}.
Translated shifted(const PolyhedronData& p, const Vec& shift) {
  Translated t{p.A, p.b, p.Aeq, p.beq};
  if (t.A.rows()) t.b -= t.A * shift;
  if (t.Aeq.rows()) t.beq -= t.Aeq * shift;
  return t;
}

/// Minimum-norm point of {y : y + sA ∈ A} ∩ {y : y + sB ∈ B}, or nullopt if empty.
std::optional<Vec> min_norm_common(const PolyhedronData& A, const Vec& sA, const PolyhedronData& B, const Vec& sB) {
  const Translated ta = shifted(A, sA);
  const Translated tb = shifted(B, sB);
  const Eigen::Index n = sA.size();
  Mat M(ta.A.rows() + tb.A.rows(), n);
  Vec m(M.rows());
  if (ta.A.rows()) {
    M.topRows(ta.A.rows()) = ta.A;
    m.head(ta.A.rows()) = ta.b;
  }
  if (tb.A.rows()) {
    M.bottomRows(tb.A.rows()) = tb.A;
    m.tail(tb.A.rows()) = tb.b;
  }
  Mat E(ta.Aeq.rows() + tb.Aeq.rows(), n);
  Vec e(E.rows());
  if (ta.Aeq.rows()) {
    E.topRows(ta.Aeq.rows()) = ta.Aeq;
    e.head(ta.Aeq.rows()) = ta.beq;
  }
  if (tb.Aeq.rows()) {
    E.bottomRows(tb.Aeq.rows()) = tb.Aeq;
    e.tail(tb.Aeq.rows()) = tb.beq;
  }
  try {
    return project_polyhedron(Vec::Zero(n), M, m, E, e);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::Infeasible) return std::nullopt;
    throw;
  }
}

}  // namespace

TransversalityCertificate certify_transversality_kruger(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                        double alpha, double delta, const KrugerOptions& opt) {
  if (!(alpha > 0.0) || !(delta > 0.0)) throw Error(ErrorKind::Precondition, "kruger: alpha and delta must be positive");
  if (distance(A, x0) > 1e-9 || distance(B, x0) > 1e-9) throw Error(ErrorKind::Precondition, "kruger: x0 not in A∩B");
  const auto pA = polyhedral_form(A);
  const auto pB = polyhedral_form(B);
  const bool polyhedral = pA && pB;
  if (!polyhedral) {
    if (!opt.sampled_fallback)
      throw Error(ErrorKind::Unsupported, "kruger: non-polyhedral sets need the sampled fallback");
    if (!(A.convex_exact() && B.convex_exact()))
      throw Error(ErrorKind::Unsupported, "kruger: sampled fallback needs convex sets with exact projections");
  }
  const int n = A.dim();

  auto pairs = sample_pairs(A, B, x0, delta, opt.sampling.pairs, opt.sampling.seed);
  pairs.insert(pairs.begin(), PointPair{x0, x0});

  std::vector<std::pair<Vec, Vec>> ws;
  const Vec zero = Vec::Zero(n);
  for (const auto& u : direction_net(n, opt.sampling.directions, opt.sampling.seed)) {
    ws.emplace_back(alpha * u, -alpha * u);
    ws.emplace_back(alpha * u, zero);
    ws.emplace_back(zero, alpha * u);
  }
  Rng rng(opt.sampling.seed ^ 0x4b52u);
  for (int i = 0; i < opt.sampling.directions; ++i) ws.emplace_back(rng.in_ball(zero, alpha), rng.in_ball(zero, alpha));

  TransversalityCertificate cert;
  cert.notion = Notion::Transversal;
  cert.point = x0;
  cert.constants = {{"alpha", alpha}, {"delta", delta}};
  cert.exact = false;
  double worst = -kInf;
  int checks = 0;
  for (const auto& p : pairs) {
    for (const double frac : opt.rho_fractions) {
      const double rho = frac * delta;
      for (const auto& [w1, w2] : ws) {
        ++checks;
        double margin;
        if (polyhedral) {
          const auto y = min_norm_common(*pA, p.xA + rho * w1, *pB, p.xB + rho * w2);
          margin = y ? y->norm() - rho : kInf;
        } else {
          const std::vector<SetSpec> sets{SetSpec::translate(A, -(p.xA + rho * w1)),
                                          SetSpec::translate(B, -(p.xB + rho * w2)), SetSpec::ball(zero, rho)};
          const Vec y = dykstra(sets, zero, 5000);
          const double miss = std::max({distance(sets[0], y), distance(sets[1], y), distance(sets[2], y)});
          margin = miss > 1e-7 ? miss : y.norm() - rho;
        }
        worst = std::max(worst, margin);
        if (margin > 1e-8) {
          cert.status = CertStatus::Refuted;
          cert.witnesses.push_back({"violating (xA, xB, w1, w2) at rho=" + fmt(rho), {p.xA, p.xB, w1, w2},
                                    std::isfinite(margin) ? margin : 1e300});
          cert.rationale = "translated sets miss the rho-ball (margin " + fmt(margin) + ")";
          return cert;
        }
      }
    }
  }
  cert.status = CertStatus::Certified;
  cert.constants["checks"] = checks;
  cert.constants["worst_margin"] = worst;
  cert.rationale = polyhedral ? "every sampled translate pair meets the rho-ball (QP per sample)"
                              : "every sampled translate pair meets the rho-ball (Dykstra per sample)";
  return cert;
}

// ---------------------------------------------------------------------------

bool verify_step(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB, double M, double eta,
                 const StepPair& s, double tol) {
  if (!(s.t > 0.0)) return false;
  const double slack = 1e-12 * std::max(1.0, M);
  if (s.wA.norm() > M + slack || s.wB.norm() > M + slack) return false;
  if (distance(A, xA + s.t * s.wA) > tol || distance(B, xB + s.t * s.wB) > tol) return false;
  const double before = (xA - xB).norm();
  const double after = (xA - xB + s.t * (s.wA - s.wB)).norm();
  return after <= before - s.t * eta + 1e-12 * (1.0 + before);
}

namespace {

struct Candidate {
  Vec wA;
  Vec wB;
};

std::vector<Vec> side_candidates(const SetSpec& S, const Vec& x, const Vec& d, double M, double t,
                                 const StepOracleOptions& opt) {
  std::vector<Vec> out{Vec::Zero(x.size())};
  const auto add = [&](const Vec& target) {
    const Vec w = (proj(S, target) - x) / t;
    if (w.norm() <= M * (1.0 + 1e-12)) out.push_back(w);
  };
  for (const double s : {M, 0.5 * M, 0.25 * M}) add(x + t * s * d);
  const Vec q = proj(S, x + t * d) - x;
  if (q.norm() > 1e-14 * t) add(x + t * M * q / q.norm());
  Rng rng(opt.seed);
  for (int i = 0; i < opt.random_candidates; ++i) {
    Vec u = rng.unit_vector(static_cast<int>(x.size()));
    Vec dir = d + u;
    if (dir.norm() < 1e-12) continue;
    add(x + t * M * dir / dir.norm());
  }
  return out;
}

std::vector<Candidate> joint_candidates(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB,
                                        const Vec& d, double M, double eta, double t) {
  std::vector<Candidate> out;
  const auto pA = polyhedral_form(A);
  const auto pB = polyhedral_form(B);
  if (!pA || !pB) return out;
  std::vector<double> lengths{eta};
  if (M - 1.0 > eta) lengths.push_back(M - 1.0);
  for (const double a : lengths) {
    if (!(a > 0.0)) continue;
    // xA + t(a d + u) ∈ A and xB + t u ∈ B with u as short as possible.
    if (auto y = min_norm_common(*pA, xA + t * a * d, *pB, xB)) out.push_back({a * d + *y / t, *y / t});
    if (auto y = min_norm_common(*pA, xA, *pB, xB - t * a * d)) out.push_back({*y / t, -a * d + *y / t});
  }
  return out;
}

std::optional<StepPair> best_step(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB, double M,
                                  double eta, double t, const StepOracleOptions& opt) {
  const double gap = (xA - xB).norm();
  if (gap <= 0.0) return std::nullopt;
  const Vec d = (xB - xA) / gap;
  std::vector<Candidate> cands = joint_candidates(A, B, xA, xB, d, M, eta, t);
  const auto ca = side_candidates(A, xA, d, M, t, opt);
  const auto cb = side_candidates(B, xB, -d, M, t, opt);
  for (const auto& wa : ca)
    for (const auto& wb : cb) cands.push_back({wa, wb});

  std::vector<std::pair<double, size_t>> order;
  for (size_t i = 0; i < cands.size(); ++i)
    order.emplace_back((xA - xB + t * (cands[i].wA - cands[i].wB)).norm(), i);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [after, i] : order) {
    StepPair s{t, cands[i].wA, cands[i].wB, gap, after};
    if (verify_step(A, B, xA, xB, M, 0.0, s)) return s;
  }
  return std::nullopt;
}

}  // namespace

std::optional<StepPair> step_at(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB, double M,
                                double eta, double t, const StepOracleOptions& opt) {
  auto s = best_step(A, B, xA, xB, M, eta, t, opt);
  if (!s || !verify_step(A, B, xA, xB, M, eta, *s)) return std::nullopt;
  return s;
}

std::optional<StepPair> tangential_step_oracle(const SetSpec& A, const SetSpec& B, const Vec& xA, const Vec& xB,
                                               double M, double eta, const std::vector<double>& tgrid,
                                               const StepOracleOptions& opt) {
  if ((xA - xB).norm() == 0.0) throw Error(ErrorKind::Precondition, "step oracle: xA == xB");
  for (const double t : tgrid) {
    if (auto s = step_at(A, B, xA, xB, M, eta, t, opt)) {
      // Defense in depth: the returned pair is checked again from scratch.
      if (!verify_step(A, B, xA, xB, M, eta, *s)) throw Error(ErrorKind::NonConvergence, "step oracle: re-verification failed");
      return s;
    }
  }
  return std::nullopt;
}

std::vector<double> step_grid(double delta, double gap, double eta, double t_floor) {
  std::vector<double> grid;
  const double t0 = std::min(delta, gap / eta);
  for (double t = t0; t >= t_floor; t *= 0.5) grid.push_back(t);
  return grid;
}

std::vector<double> validation_grid(double delta, double gap, double eta, int terms) {
  const auto full = step_grid(delta, gap, eta);
  std::vector<double> out;
  for (size_t j = 4; j < full.size() && static_cast<int>(out.size()) < terms; j += 4) out.push_back(full[j]);
  if (out.empty()) out.push_back(full.empty() ? std::min(delta, gap / eta) : full.back());
  return out;
}

double pair_rate(const SetSpec& A, const SetSpec& B, const PointPair& p, double M, double delta,
                 const StepOracleOptions& opt) {
  const double gap = (p.xA - p.xB).norm();
  double rate = kInf;
  for (const double t : validation_grid(delta, gap, 2.0 * M)) {
    const auto s = best_step(A, B, p.xA, p.xB, M, 0.0, t, opt);
    rate = std::min(rate, s ? s->decrease() / t : 0.0);
  }
  return rate;
}

TangentialValidation validate_tangential_constants(const SetSpec& A, const SetSpec& B,
                                                   const std::vector<PointPair>& pairs, double M, double eta,
                                                   double delta, const StepOracleOptions& opt) {
  TangentialValidation out;
  for (const auto& p : pairs) {
    const double gap = (p.xA - p.xB).norm();
    if (gap == 0.0) continue;
    ++out.checked;
    bool ok = true;
    for (const double t : validation_grid(delta, gap, eta)) {
      if (!step_at(A, B, p.xA, p.xB, M, eta, t, opt)) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      out.valid = false;
      out.failures.push_back(p);
    }
  }
  return out;
}

TransversalityCertificate estimate_tangential_constants(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                        const TangentialOptions& opt) {
  if (distance(A, x0) > 1e-9 || distance(B, x0) > 1e-9)
    throw Error(ErrorKind::Precondition, "estimate_tangential_constants: x0 not in A∩B");
  const auto pairs = sample_pairs(A, B, x0, opt.delta, opt.sampling.pairs, opt.sampling.seed);
  TransversalityCertificate cert;
  cert.notion = Notion::TangentiallyTransversal;
  cert.point = x0;
  cert.exact = false;
  if (pairs.empty()) {
    cert.status = CertStatus::Inconclusive;
    cert.rationale = "no distinct pairs could be sampled";
    return cert;
  }

  double best_ratio = -1.0, best_M = 0.0, best_eta = 0.0;
  std::vector<double> best_rates;
  size_t worst_pair = 0;
  for (const double M : opt.M_schedule) {
    std::vector<double> rates;
    for (const auto& p : pairs) rates.push_back(pair_rate(A, B, p, M, opt.delta));
    const auto it = std::min_element(rates.begin(), rates.end());
    const double eta = *it;
    if (eta / M > best_ratio * (1.0 + 1e-9)) {
      best_ratio = eta / M;
      best_M = M;
      best_eta = eta;
      best_rates = rates;
      worst_pair = static_cast<size_t>(it - rates.begin());
    }
  }
  cert.per_sample = best_rates;
  cert.constants = {{"M", best_M}, {"delta", opt.delta}, {"eta_measured", best_eta}};
  if (best_eta < opt.eta_floor) {
    cert.status = CertStatus::Inconclusive;
    cert.witnesses.push_back({"pair with the smallest rate", {pairs[worst_pair].xA, pairs[worst_pair].xB}, best_eta});
    cert.rationale = "some pair admits no linear gap-decrease rate above the floor at any M tried";
    return cert;
  }
  double eta = best_eta * (1.0 - 1e-6);
  for (int attempt = 0; attempt < 4; ++attempt, eta *= 0.5) {
    const auto v = validate_tangential_constants(A, B, pairs, best_M, eta, opt.delta);
    if (v.valid) {
      cert.status = CertStatus::Certified;
      cert.constants["eta"] = eta;
      cert.rationale = "rate validated on every sampled pair along a decreasing t-sequence";
      return cert;
    }
  }
  cert.status = CertStatus::Inconclusive;
  cert.rationale = "measured rate could not be re-validated";
  return cert;
}

// ---------------------------------------------------------------------------

std::vector<Vec> shell_points(const SetSpec& A, const SetSpec& B, const Vec& x0, double radius, double delta,
                              const SubtransversalityOptions& opt) {
  std::vector<Vec> base;
  for (const auto& u : direction_net(static_cast<int>(x0.size()), opt.sampling.shell_directions, opt.sampling.seed))
    for (const double f : {1.0, 0.5}) base.push_back(x0 + (radius * f) * u);
  std::vector<Vec> out = base;
  for (const SetSpec* S : {&A, &B}) {
    for (const auto& x : base) {
      Vec p = proj(*S, x);
      if ((p - x0).norm() <= delta) out.push_back(std::move(p));
    }
  }
  return out;
}

TransversalityCertificate estimate_subtransversality_constant(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                              double delta, const SubtransversalityOptions& opt) {
  if (!(delta > 0.0)) throw Error(ErrorKind::Precondition, "subtransversality: delta must be positive");
  if (distance(A, x0) > 1e-9 || distance(B, x0) > 1e-9)
    throw Error(ErrorKind::Precondition, "subtransversality: x0 not in A∩B");
  const IntersectionOracle inter(A, B);
  TransversalityCertificate cert;
  cert.notion = Notion::Subtransversal;
  cert.point = x0;
  cert.exact = false;

  std::vector<double> level_max;
  Vec argmax_last;
  bool approximate = false;
  for (int k = 0; k < opt.levels; ++k) {
    const double radius = delta * std::pow(4.0, -k);
    double best = 0.0;
    Vec arg = x0;
    for (const auto& x : shell_points(A, B, x0, radius, delta, opt)) {
      const double denom = distance(A, x) + distance(B, x);
      if (denom < opt.denom_floor) continue;
      const auto di = inter.distance(x);
      approximate = approximate || di.approximate;
      const double r = di.value / denom;
      if (r > best) {
        best = r;
        arg = x;
      }
    }
    level_max.push_back(best);
    argmax_last = arg;
  }
  cert.per_sample = level_max;
  const double khat = *std::max_element(level_max.begin(), level_max.end());
  bool escalates = level_max.size() >= 4;
  for (size_t k = 0; escalates && k + 1 < level_max.size(); ++k)
    escalates = level_max[k] > 0.0 && level_max[k + 1] >= 2.0 * level_max[k];
  cert.constants = {{"K", khat}, {"delta", delta}};
  if (escalates) {
    cert.status = CertStatus::Refuted;
    cert.witnesses.push_back({"largest ratio at the finest level", {argmax_last}, level_max.back()});
    cert.rationale = "the maximal ratio at least doubles at every refinement level";
  } else {
    cert.status = CertStatus::Certified;
    cert.rationale = approximate ? "sampled ratios bounded (intersection distance by Dykstra iterations)"
                                 : "sampled ratios bounded";
  }
  return cert;
}

// ---------------------------------------------------------------------------

namespace {

mpq_class exact_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::Precondition, std::string(what) + " must be positive");
  return mpq_class(v);
}

}  // namespace

TangentialConstants transfer_constants_transversal_to_tangential(double alpha, double delta) {
  const mpq_class a = exact_positive(alpha, "alpha");
  const mpq_class d = exact_positive(delta, "delta");
  return {a + 1, a, d};
}

SubtransversalConstants transfer_constants_tangential_to_sub(double M, double eta, double delta) {
  const mpq_class m = exact_positive(M, "M");
  const mpq_class e = exact_positive(eta, "eta");
  const mpq_class d = exact_positive(delta, "delta");
  const mpq_class ratio = m / e;
  mpq_class K = 1 + ratio;
  mpq_class zeta = d / (2 * (1 + 2 * ratio));
  K.canonicalize();
  zeta.canonicalize();
  return {K, zeta};
}


// ---------------------------------------------------------------------------

namespace {

PolyCone exact_cone(const SetSpec& S, const Vec& x) {
  if (polyhedral_form(S)) return tangent_cone_polyhedral(S, x);
  return clarke_cone_convex(S, x);
}

/// dist(v, (G ∩ P) - T) where P = {a : rows.a <= h}.
double covering_distance(const PolyCone& G, const PolyCone& T, const Vec& v, const Mat& rows, const Vec& h) {
  const Eigen::Index n = v.size();
  const auto gf = G.facets(), ge = G.equalities(), tf = T.facets(), te = T.equalities();
  const Eigen::Index ni = static_cast<Eigen::Index>(gf.size() + tf.size()) + rows.rows();
  const Eigen::Index ne = static_cast<Eigen::Index>(ge.size() + te.size());
  Mat Ai = Mat::Zero(ni, 2 * n), Ae = Mat::Zero(ne, 2 * n);
  Vec bi = Vec::Zero(ni), be = Vec::Zero(ne);
  Eigen::Index r = 0;
  for (const auto& f : gf) Ai.block(r++, 0, 1, n) = f.transpose();
  for (const auto& f : tf) Ai.block(r++, n, 1, n) = f.transpose();
  for (Eigen::Index i = 0; i < rows.rows(); ++i, ++r) {
    Ai.block(r, 0, 1, n) = rows.row(i);
    bi[r] = h[i];
  }
  r = 0;
  for (const auto& e : ge) Ae.block(r++, 0, 1, n) = e.transpose();
  for (const auto& e : te) Ae.block(r++, n, 1, n) = e.transpose();
  // min |v - a + b|^2 with a tiny ridge so the Hessian is definite.
  const double ridge = 1e-10;
  QpProblem qp;
  qp.H = Mat::Zero(2 * n, 2 * n);
  qp.H.topLeftCorner(n, n) = (2.0 + ridge) * Mat::Identity(n, n);
  qp.H.bottomRightCorner(n, n) = (2.0 + ridge) * Mat::Identity(n, n);
  qp.H.topRightCorner(n, n) = -2.0 * Mat::Identity(n, n);
  qp.H.bottomLeftCorner(n, n) = -2.0 * Mat::Identity(n, n);
  qp.g = Vec(2 * n);
  qp.g << -2.0 * v, 2.0 * v;
  qp.A = Ai;
  qp.b = bi;
  qp.Aeq = Ae;
  qp.beq = be;
  const auto res = qp_solve(qp);
  return (v - res.x.head(n) + res.x.tail(n)).norm();
}

void ball_polytopes(int n, double M, int polygon, Mat& inner_rows, Vec& inner_h, Mat& outer_rows, Vec& outer_h) {
  if (n == 2) {
    inner_rows = Mat(polygon, 2);
    for (int k = 0; k < polygon; ++k) {
      const double a = 2.0 * std::numbers::pi * k / polygon;
      inner_rows(k, 0) = std::cos(a);
      inner_rows(k, 1) = std::sin(a);
    }
    outer_rows = inner_rows;
    inner_h = Vec::Constant(polygon, M * std::cos(std::numbers::pi / polygon));
    outer_h = Vec::Constant(polygon, M);
    return;
  }
  inner_rows = Mat(2 * n, n);
  inner_rows << Mat::Identity(n, n), -Mat::Identity(n, n);
  outer_rows = inner_rows;
  inner_h = Vec::Constant(2 * n, M / std::sqrt(static_cast<double>(n)));
  outer_h = Vec::Constant(2 * n, M);
}

}  // namespace

TransversalityCertificate certify_covering(const SetSpec& A, const SetSpec& B, const Vec& x0, double delta,
                                         double alpha, double M, const CoveringOptions& opt) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::Precondition, "covering condition: alpha must lie in [0,1)");
  if (!(M > 0.0) || !(delta > 0.0)) throw Error(ErrorKind::Precondition, "covering condition: M, delta must be positive");
  if (distance(A, x0) > 1e-9 || distance(B, x0) > 1e-9) throw Error(ErrorKind::Precondition, "covering condition: x0 not in A∩B");
  const int n = A.dim();
  auto pairs = sample_pairs(A, B, x0, delta, opt.sampling.pairs, opt.sampling.seed);
  pairs.insert(pairs.begin(), PointPair{x0, x0});
  const auto net = direction_net(n, opt.net, opt.sampling.seed);
  const double net_res = n == 2   ? 2.0 * std::sin(std::numbers::pi / (2.0 * opt.net))
                         : n == 3 ? 2.0 / std::sqrt(static_cast<double>(opt.net))
                                  : 1.0;
  Mat in_rows, out_rows;
  Vec in_h, out_h;
  ball_polytopes(n, M, opt.polygon, in_rows, in_h, out_rows, out_h);

  TransversalityCertificate cert;
  cert.notion = Notion::CoveringSufficient;
  cert.point = x0;
  cert.exact = false;
  double worst_in = 0.0, worst_out = 0.0;
  for (const auto& p : pairs) {
    const PolyCone G = exact_cone(A, p.xA);
    const PolyCone T = exact_cone(B, p.xB);
    double pair_worst = 0.0;
    for (const auto& v : net) {
      const double d_in = covering_distance(G, T, v, in_rows, in_h);
      pair_worst = std::max(pair_worst, d_in);
      worst_in = std::max(worst_in, d_in);
      if (d_in <= alpha + net_res) continue;
      const double d_out = covering_distance(G, T, v, out_rows, out_h);
      worst_out = std::max(worst_out, d_out);
      if (d_out > alpha + net_res && cert.status != CertStatus::Refuted) {
        cert.status = CertStatus::Refuted;
        cert.witnesses.push_back({"uncovered unit direction v at (xA, xB)", {v, p.xA, p.xB}, d_out});
      }
    }
    cert.per_sample.push_back(pair_worst);
  }
  cert.constants = {{"alpha", alpha},         {"M", M},           {"delta", delta},
                    {"net_resolution", net_res}, {"max_distance", worst_in}};
  if (cert.status == CertStatus::Refuted) {
    cert.rationale = "a unit direction stays farther than alpha from the bounded cone difference";
    return cert;
  }
  if (worst_in <= alpha + net_res) {
    cert.status = CertStatus::Certified;
    cert.constants["M_tangential"] = M + 3.0;
    cert.constants["eta_sup"] = 1.0 - alpha;
    cert.formulas = {{"M_tangential", "M + 3"}, {"eta_sup", "eta < 1 - alpha"}, {"delta", "delta"}};
    cert.rationale = "unit sphere covered up to alpha plus net resolution at every sampled pair";
  } else {
    cert.status = CertStatus::Inconclusive;
    cert.rationale = "inner and outer ball approximations disagree";
  }
  return cert;
}

TransversalityCertificate certify_massive_dense(const SetSpec& A, const SetSpec& B, const Vec& x0,
                                                const TangentialOptions& cross_check) {
  TransversalityCertificate cert;
  cert.notion = Notion::MassiveDense;
  cert.point = x0;
  const PolyCone TA = clarke_cone_convex(A, x0);
  const PolyCone TB = clarke_cone_convex(B, x0);
  const auto dense = is_dense_difference(TA, TB);
  cert.rationale = "massive: in R^n every closed set is massive with the compact set eps*B; ";
  if (!dense.dense) {
    cert.status = CertStatus::Inconclusive;
    cert.exact = true;
    cert.witnesses.push_back({"nonzero w in polar(T_A) ∩ -polar(T_B)", {*dense.witness}, 0.0});
    cert.rationale += "Clarke cone difference is not dense, the sufficient condition does not apply";
    return cert;
  }
  cert.status = CertStatus::Certified;
  cert.exact = true;
  const auto emp = estimate_tangential_constants(A, B, x0, cross_check);
  cert.constants = emp.constants;
  cert.constants["cross_check_certified"] = emp.certified() ? 1.0 : 0.0;
  cert.rationale += std::string("Clarke cone difference is dense; empirical cross-check ") + to_string(emp.status);
  return cert;
}

// ---------------------------------------------------------------------------

AltProjResult altproj_rate(const SetSpec& A, const SetSpec& B, const Vec& x_start, int iters) {
  AltProjResult out;
  std::optional<IntersectionOracle> inter;
  try {
    inter.emplace(A, B);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Unsupported) throw;
  }
  out.gap_from_intersection = inter.has_value();
  const auto gap_of = [&](const Vec& x) {
    return inter ? inter->distance(x).value : (x - project(B, x)).norm();
  };
  Vec x = x_start;
  double g = gap_of(x);
  out.iterates.push_back(x);
  out.gaps.push_back(g);
  if (g <= 1e-12 && distance(A, x) <= 1e-12 && distance(B, x) <= 1e-12) {
    out.start_in_intersection = true;
    return out;
  }
  for (int k = 0; k < iters; ++k) {
    x = project(A, project(B, x));
    g = gap_of(x);
    out.iterates.push_back(x);
    out.gaps.push_back(g);
    if (g <= 1e-15 * (1.0 + x.norm())) break;
  }
  // Fit from the first iterate on A; the start may lie off both sets.
  const size_t first = out.gaps.size() > 2 ? 1 : 0;
  const size_t last = out.gaps.size() - 1;
  if (last > first && out.gaps[first] > 0.0 && out.gaps[last] > 0.0) {
    out.rate = std::pow(out.gaps[last] / out.gaps[first], 1.0 / static_cast<double>(last - first));
    const size_t mid = (first + last) / 2;
    if (last > mid && out.gaps[mid] > 0.0) {
      const double tail = std::pow(out.gaps[last] / out.gaps[mid], 1.0 / static_cast<double>(last - mid));
      out.sublinear = tail > 0.99;
    }
  }
  return out;
}

}  // namespace tvx
