#include "tvx/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "tvx/error.hpp"
#include "tvx/gapreduce.hpp"
#include "tvx/intersection.hpp"

namespace tvx {

namespace fs = std::filesystem;

const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{
      "kruger",       "tangential",   "subtransversality",      "transfer",
      "covering",       "massive_dense", "altproj",               "gap_reduction",
      "metric_form",  "nonseparation", "intersection_bouligand", "intersection_clarke",
      "multiplier_rule", "multiplier_rule_massive", "qualification", "chain"};
  return names;
}

// ---------------------------------------------------------------------------
// JSON <-> values

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorKind::Parse, msg); }

Json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

double as_number(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  parse_fail(what + ": expected a number");
}

Vec vec_from(const Json& j, const std::string& what) {
  if (!j.is_array()) parse_fail(what + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], what);
  return v;
}

Mat mat_from(const Json& j, const std::string& what, Eigen::Index cols) {
  if (!j.is_array()) parse_fail(what + ": expected an array of rows");
  Mat m(static_cast<Eigen::Index>(j.size()), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    const Vec r = vec_from(j[i], what);
    if (r.size() != cols) parse_fail(what + ": row length differs from the dimension");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) parse_fail(what + ": missing field '" + key + "'");
  return j.at(key);
}

}  // namespace

Json poly_to_json(const PolyFunction& f) {
  Json j{{"slopes", mat_json(f.slopes)}, {"offsets", vec_json(f.offsets)}};
  if (f.domain_A.rows() > 0) {
    j["domain_A"] = mat_json(f.domain_A);
    j["domain_b"] = vec_json(f.domain_b);
  }
  return j;
}

PolyFunction poly_from_json(const Json& j) {
  if (!j.is_object()) parse_fail("function: expected an object");
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "l1") return PolyFunction::l1_norm(field(j, "dim", "l1 function").get<int>());
    if (kind == "affine") return PolyFunction::affine(vec_from(field(j, "slope", "affine"), "slope"),
                                                      as_number(field(j, "offset", "affine"), "offset"));
    if (kind == "indicator") {
      const Json& A = field(j, "A", "indicator");
      const Eigen::Index n = A.empty() ? field(j, "dim", "indicator").get<int>()
                                       : static_cast<Eigen::Index>(A.at(0).size());
      return PolyFunction::indicator(mat_from(A, "indicator A", n), vec_from(field(j, "b", "indicator"), "b"));
    }
    parse_fail("unknown function kind '" + kind + "'");
  }
  const Json& S = field(j, "slopes", "function");
  if (S.empty()) parse_fail("function: at least one affine piece required");
  const Eigen::Index n = static_cast<Eigen::Index>(S.at(0).size());
  PolyFunction f = PolyFunction::max_affine(mat_from(S, "slopes", n), vec_from(field(j, "offsets", "function"), "offsets"));
  if (j.contains("domain_A")) {
    f.domain_A = mat_from(j.at("domain_A"), "domain_A", n);
    f.domain_b = vec_from(field(j, "domain_b", "function"), "domain_b");
  }
  return f;
}

Json set_to_json(const SetSpec& S) {
  switch (S.kind()) {
    case SetKind::Polyhedron: {
      const auto& p = *S.get<PolyhedronData>();
      Json j{{"type", "polyhedron"}, {"dim", S.dim()}, {"A", mat_json(p.A)}, {"b", vec_json(p.b)}};
      if (p.Aeq.rows() > 0) {
        j["Aeq"] = mat_json(p.Aeq);
        j["beq"] = vec_json(p.beq);
      }
      return j;
    }
    case SetKind::Ball: {
      const auto& b = *S.get<BallData>();
      return {{"type", "ball"}, {"center", vec_json(b.center)}, {"radius", num(b.radius)}};
    }
    case SetKind::Affine: {
      const auto& a = *S.get<AffineData>();
      Json dirs = Json::array();
      for (Eigen::Index c = 0; c < a.directions.cols(); ++c) dirs.push_back(vec_json(a.directions.col(c)));
      return {{"type", "affine"}, {"base", vec_json(a.base)}, {"directions", dirs}};
    }
    case SetKind::LevelSet: {
      const auto& l = *S.get<LevelSetData>();
      if (!l.quadratic) throw Error(ErrorKind::Representation, "set_to_json: only quadratic level sets serialize");
      return {{"type", "quadratic_level"},
              {"Q", mat_json(l.quadratic->Q)},
              {"q", vec_json(l.quadratic->q)},
              {"c", num(l.quadratic->c)},
              {"sense", l.sense == LevelSense::Equal ? "eq" : "le"}};
    }
    case SetKind::Translate: {
      const auto& t = *S.get<TranslateData>();
      return {{"type", "translate"}, {"inner", set_to_json(*t.inner)}, {"shift", vec_json(t.shift)}};
    }
    case SetKind::Union: {
      Json m = Json::array();
      for (const auto& s : S.get<UnionData>()->members) m.push_back(set_to_json(s));
      return {{"type", "union"}, {"members", m}};
    }
    case SetKind::Epigraph: {
      const auto& e = *S.get<EpigraphData>();
      if (!e.poly) throw Error(ErrorKind::Representation, "set_to_json: only polyhedral epigraphs serialize");
      return {{"type", "epigraph"}, {"function", poly_to_json(*e.poly)}};
    }
    case SetKind::Product: {
      Json f = Json::array();
      for (const auto& s : S.get<ProductData>()->factors) f.push_back(set_to_json(s));
      return {{"type", "product"}, {"factors", f}};
    }
  }
  throw Error(ErrorKind::Representation, "set_to_json: unknown variant");
}

SetSpec set_from_json(const Json& j) {
  if (!j.is_object()) parse_fail("set: expected an object");
  const Json& tag = field(j, "type", "set");
  if (!tag.is_string()) parse_fail("set: 'type' must be a string");
  const auto type = tag.get<std::string>();
  if (type == "polyhedron") {
    const int n = field(j, "dim", "polyhedron").get<int>();
    const Json empty = Json::array();
    const Mat A = mat_from(j.value("A", empty), "polyhedron A", n);
    const Vec b = vec_from(j.value("b", empty), "polyhedron b");
    if (j.contains("Aeq")) {
      return SetSpec::polyhedron(A, b, mat_from(j.at("Aeq"), "polyhedron Aeq", n), vec_from(field(j, "beq", "polyhedron"), "beq"));
    }
    return SetSpec::polyhedron(A, b, Mat(0, n), Vec(0));
  }
  if (type == "halfspace")
    return SetSpec::halfspace(vec_from(field(j, "normal", "halfspace"), "normal"),
                              as_number(field(j, "offset", "halfspace"), "offset"));
  if (type == "box") return SetSpec::box(vec_from(field(j, "lo", "box"), "lo"), vec_from(field(j, "hi", "box"), "hi"));
  if (type == "whole") return SetSpec::whole_space(field(j, "dim", "whole").get<int>());
  if (type == "ball")
    return SetSpec::ball(vec_from(field(j, "center", "ball"), "center"), as_number(field(j, "radius", "ball"), "radius"));
  if (type == "line")
    return SetSpec::line(vec_from(field(j, "base", "line"), "base"), vec_from(field(j, "direction", "line"), "direction"));
  if (type == "point") return SetSpec::point(vec_from(field(j, "at", "point"), "at"));
  if (type == "affine") {
    const Vec base = vec_from(field(j, "base", "affine"), "base");
    const Json& d = field(j, "directions", "affine");
    if (!d.is_array()) parse_fail("affine: directions must be an array");
    Mat D(base.size(), static_cast<Eigen::Index>(d.size()));
    for (size_t c = 0; c < d.size(); ++c) {
      const Vec col = vec_from(d[c], "affine direction");
      if (col.size() != base.size()) parse_fail("affine: direction length differs from the base");
      D.col(static_cast<Eigen::Index>(c)) = col;
    }
    return SetSpec::affine(base, D);
  }
  if (type == "quadratic_level") {
    const Vec q = vec_from(field(j, "q", "quadratic_level"), "q");
    Quadratic quad{mat_from(field(j, "Q", "quadratic_level"), "Q", q.size()), q,
                   as_number(j.value("c", Json(0.0)), "c")};
    const auto sense = j.value("sense", std::string("le"));
    if (sense != "le" && sense != "eq") parse_fail("quadratic_level: unknown sense '" + sense + "'");
    return SetSpec::quadratic_level_set(std::move(quad), sense == "eq" ? LevelSense::Equal : LevelSense::LessEqual);
  }
  if (type == "translate")
    return SetSpec::translate(set_from_json(field(j, "inner", "translate")), vec_from(field(j, "shift", "translate"), "shift"));
  if (type == "union" || type == "product") {
    const Json& m = field(j, type == "union" ? "members" : "factors", type);
    if (!m.is_array()) parse_fail(type + ": expected an array of sets");
    std::vector<SetSpec> parts;
    for (const auto& e : m) parts.push_back(set_from_json(e));
    return type == "union" ? SetSpec::union_of(std::move(parts)) : SetSpec::product(std::move(parts));
  }
  if (type == "epigraph") return SetSpec::epigraph(poly_from_json(field(j, "function", "epigraph")));
  parse_fail("unknown set type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte is one past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw Error(ErrorKind::Parse, origin + ":" + line_col(text, at) + ": malformed JSON");
  }
  try {
    if (!j.is_object()) parse_fail(origin + ": scenario must be an object");
    Scenario s;
    const Json& version = field(j, "version", origin);
    if (!version.is_number_integer() || version.get<int>() != kScenarioVersion)
      throw Error(ErrorKind::Configuration, origin + ": unsupported scenario version");
    s.id = field(j, "id", origin).get<std::string>();
    s.description = j.value("description", std::string());
    const Json& seed = field(j, "seed", origin);
    if (!seed.is_number_integer()) parse_fail(origin + ": seed must be an integer");
    s.seed = seed.get<std::uint64_t>();
    if (j.contains("budget")) {
      if (!j.at("budget").is_number_integer() || j.at("budget").get<long long>() < 0)
        throw Error(ErrorKind::Configuration, origin + ": budget must be a nonnegative integer");
      s.budget = j.at("budget").get<int>();
    }
    if (j.contains("tol")) {
      s.tol = as_number(j.at("tol"), "tol");
      if (!(*s.tol > 0.0)) throw Error(ErrorKind::Configuration, origin + ": tol must be positive");
    }
    if (j.contains("sets")) {
      const Json& sets = j.at("sets");
      s.A = set_from_json(field(sets, "A", "sets"));
      s.B = set_from_json(field(sets, "B", "sets"));
      if (s.A->dim() != s.B->dim()) throw Error(ErrorKind::DimensionMismatch, origin + ": sets A and B differ in dimension");
    }
    if (j.contains("point")) s.point = vec_from(j.at("point"), "point");
    if (j.contains("problem")) {
      const Json& p = j.at("problem");
      s.problem = ProblemSpec{poly_from_json(field(p, "objective", "problem")),
                              set_from_json(field(p, "constraint", "problem")), vec_from(field(p, "x0", "problem"), "x0")};
    }
    if (j.contains("qualification")) {
      const Json& q = j.at("qualification");
      s.qualification = QualificationSpec{poly_from_json(field(q, "f1", "qualification")),
                                          poly_from_json(field(q, "f2", "qualification")),
                                          vec_from(field(q, "x0", "qualification"), "x0")};
    }
    const Json& an = j.value("analyses", Json::array());
    if (!an.is_array()) parse_fail(origin + ": analyses must be an array");
    for (const auto& a : an) {
      AnalysisRequest r;
      if (a.is_string()) {
        r.name = a.get<std::string>();
      } else {
        r.name = field(a, "name", "analysis").get<std::string>();
        r.params = a.value("params", Json::object());
        if (!r.params.is_object()) parse_fail(origin + ": params of '" + r.name + "' must be an object");
      }
      const auto& names = analysis_names();
      if (std::find(names.begin(), names.end(), r.name) == names.end())
        throw Error(ErrorKind::Configuration, origin + ": unknown analysis '" + r.name + "'");
      s.analyses.push_back(std::move(r));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, origin + ": " + e.what());
  }
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Configuration, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.filename().string());
}

Json scenario_to_json(const Scenario& s) {
  Json j{{"version", kScenarioVersion}, {"id", s.id}, {"description", s.description}, {"seed", s.seed}};
  if (s.budget > 0) j["budget"] = s.budget;
  if (s.tol) j["tol"] = num(*s.tol);
  if (s.A && s.B) j["sets"] = {{"A", set_to_json(*s.A)}, {"B", set_to_json(*s.B)}};
  if (s.point) j["point"] = vec_json(*s.point);
  if (s.problem)
    j["problem"] = {{"objective", poly_to_json(s.problem->objective)},
                    {"constraint", set_to_json(s.problem->constraint)},
                    {"x0", vec_json(s.problem->x0)}};
  if (s.qualification)
    j["qualification"] = {{"f1", poly_to_json(s.qualification->f1)},
                          {"f2", poly_to_json(s.qualification->f2)},
                          {"x0", vec_json(s.qualification->x0)}};
  Json an = Json::array();
  for (const auto& a : s.analyses) an.push_back({{"name", a.name}, {"params", a.params}});
  j["analyses"] = an;
  return j;
}

// ---------------------------------------------------------------------------
// Analyses

namespace {

Json cert_json(const TransversalityCertificate& c) {
  Json constants = Json::object();
  for (const auto& [k, v] : c.constants) constants[k] = num(v);
  Json formulas = Json::object();
  for (const auto& [k, v] : c.formulas) formulas[k] = v;
  Json witnesses = Json::array();
  for (const auto& w : c.witnesses) {
    Json vs = Json::array();
    for (const auto& v : w.vectors) vs.push_back(vec_json(v));
    witnesses.push_back({{"label", w.label}, {"value", num(w.value)}, {"vectors", vs}});
  }
  Json per = Json::array();
  for (double v : c.per_sample) per.push_back(num(v));
  return {{"notion", to_string(c.notion)},
          {"status", to_string(c.status)},
          {"exact", c.exact},
          {"point", vec_json(c.point)},
          {"constants", constants},
          {"formulas", formulas},
          {"witnesses", witnesses},
          {"per_sample", per},
          {"rationale", c.rationale}};
}

std::string q_str(const mpq_class& q) { return q.get_str(); }

Json cone_json(const PolyCone& C) {
  Json g = Json::array();
  for (const auto& v : C.generators()) g.push_back(vec_json(v));
  return {{"dim", C.dim()}, {"generators", g}};
}

Json report_json(const IntersectionReport& r) {
  Json claims = Json::array();
  for (const auto& c : r.claims) {
    Json cex = Json::array();
    for (const auto& v : c.counterexamples) cex.push_back(vec_json(v));
    claims.push_back({{"claim", c.claim}, {"holds", c.holds}, {"undecided", c.undecided}, {"counterexamples", cex}});
  }
  Json j{{"verdict", to_string(r.verdict)}, {"hypothesis", r.hypothesis}, {"exact", r.exact},
         {"monotone_ok", r.monotone_ok}, {"confidence", num(r.confidence)}, {"claims", claims}};
  if (r.TA) j["T_A"] = cone_json(*r.TA);
  if (r.TB) j["T_B"] = cone_json(*r.TB);
  if (r.TAB) j["T_AB"] = cone_json(*r.TAB);
  return j;
}

struct Context {
  const Scenario& s;
  const RunOptions& opt;
  SamplingOptions sampling;
  std::vector<Attachment> attachments;
  int discrepancies = 0;
};

double P(const Json& p, const char* key, double fallback) {
  return p.contains(key) ? as_number(p.at(key), key) : fallback;
}

Vec PV(const Json& p, const char* key) {
  if (!p.contains(key)) throw Error(ErrorKind::Configuration, std::string("missing parameter '") + key + "'");
  return vec_from(p.at(key), key);
}

const SetSpec& need_A(const Context& c) {
  if (!c.s.A) throw Error(ErrorKind::Configuration, "analysis needs sets A and B");
  return *c.s.A;
}
const SetSpec& need_B(const Context& c) {
  if (!c.s.B) throw Error(ErrorKind::Configuration, "analysis needs sets A and B");
  return *c.s.B;
}
Vec need_point(const Context& c) {
  if (!c.s.point) throw Error(ErrorKind::Configuration, "analysis needs a point");
  return *c.s.point;
}

TransversalityCertificate sub_cert(const Context& c, const Json& p) {
  SubtransversalityOptions o;
  o.sampling = c.sampling;
  return estimate_subtransversality_constant(need_A(c), need_B(c), need_point(c), P(p, "delta", 0.5), o);
}

Json multiplier_json(const MultiplierOutcome& o) {
  Json j;
  if (o.pair) {
    j["status"] = "MULTIPLIER";
    j["xi"] = vec_json(o.pair->xi);
    j["eta"] = num(o.pair->eta);
    j["checks"] = {{"nonzero", o.checks.nonzero},
                   {"eta_binary", o.checks.eta_binary},
                   {"constraint", o.checks.constraint},
                   {"objective", o.checks.objective},
                   {"samples", o.checks.samples}};
  } else {
    j["status"] = "DENSE";
    j["message"] = o.dense->message;
    if (o.dense->descent) j["descent"] = vec_json(*o.dense->descent);
    if (o.dense->corroboration) j["corroboration"] = cert_json(*o.dense->corroboration);
  }
  return j;
}

OptProblem need_problem(const Context& c) {
  if (!c.s.problem) throw Error(ErrorKind::Configuration, "analysis needs a problem");
  const auto& p = *c.s.problem;
  return OptProblem::make(p.objective, p.constraint, p.x0);
}

Json run_analysis(Context& c, const AnalysisRequest& req) {
  const Json& p = req.params;
  const std::string& n = req.name;
  if (n == "kruger") {
    KrugerOptions o;
    o.sampling = c.sampling;
    return cert_json(certify_transversality_kruger(need_A(c), need_B(c), need_point(c), P(p, "alpha", 0.2),
                                                   P(p, "delta", 0.5), o));
  }
  if (n == "tangential") {
    TangentialOptions o;
    o.sampling = c.sampling;
    o.delta = P(p, "delta", 0.5);
    return cert_json(estimate_tangential_constants(need_A(c), need_B(c), need_point(c), o));
  }
  if (n == "subtransversality") return cert_json(sub_cert(c, p));
  if (n == "transfer") {
    const double alpha = P(p, "alpha", 0.2);
    const double delta = P(p, "delta", 0.5);
    const auto t = transfer_constants_transversal_to_tangential(alpha, delta);
    const double M = P(p, "M", t.M.get_d());
    const double eta = P(p, "eta", t.eta.get_d());
    const auto s = transfer_constants_tangential_to_sub(M, eta, delta);
    return {{"status", "OK"},
            {"M", q_str(t.M)},
            {"eta", q_str(t.eta)},
            {"delta", q_str(t.delta)},
            {"K", q_str(s.K)},
            {"zeta", q_str(s.zeta)},
            {"admissible_radius", q_str(admissible_radius(M, eta, delta))}};
  }
  if (n == "covering") {
    CoveringOptions o;
    o.sampling = c.sampling;
    return cert_json(certify_covering(need_A(c), need_B(c), need_point(c), P(p, "delta", 0.5), P(p, "alpha", 0.5),
                                    P(p, "M", 1.0), o));
  }
  if (n == "massive_dense") {
    TangentialOptions o;
    o.sampling = c.sampling;
    return cert_json(certify_massive_dense(need_A(c), need_B(c), need_point(c), o));
  }
  if (n == "altproj") {
    const auto r = altproj_rate(need_A(c), need_B(c), PV(p, "start"), static_cast<int>(P(p, "iters", 200)));
    Json gaps = Json::array();
    for (double g : r.gaps) gaps.push_back(num(g));
    Json j{{"status", r.rate ? "RATE" : "NO_RATE"}, {"sublinear", r.sublinear},
           {"start_in_intersection", r.start_in_intersection}, {"gaps", gaps}};
    j["rate"] = r.rate ? num(*r.rate) : Json(nullptr);
    return j;
  }
  if (n == "gap_reduction") {
    const double tol = c.opt.tol ? *c.opt.tol : (c.s.tol ? *c.s.tol : P(p, "tol", 1e-8));
    const auto tr = gap_reduction_solve(need_A(c), need_B(c), need_point(c), PV(p, "xA"), PV(p, "xB"),
                                        P(p, "M", 1.0), P(p, "eta", 0.5), P(p, "delta", 1.0), tol);
    c.attachments.push_back({c.s.id + ".gap_reduction.csv", tr.to_csv()});
    Json viol = Json::array();
    for (const auto& v : tr.violations) viol.push_back(v);
    Json j{{"status", to_string(tr.status)}, {"iterations", tr.gaps.size() - 1}, {"gap1", num(tr.gap1())},
           {"final_gap", num(tr.gaps.back())}, {"tbar", num(tr.tbar.back())}, {"bound", num(tr.bound)},
           {"start_condition", tr.start_condition_ok}, {"violations", viol}};
    if (tr.xAB) {
      j["xAB"] = vec_json(*tr.xAB);
      j["distA"] = num(tr.distA);
      j["distB"] = num(tr.distB);
    }
    return j;
  }
  if (n == "metric_form") {
    const auto r = check_metric_form(need_A(c), need_B(c), need_point(c), P(p, "M", 1.0), P(p, "eta", 0.5),
                                     P(p, "delta", 0.5), static_cast<int>(P(p, "samples", 16)), c.sampling.seed);
    return {{"status", "OK"}, {"zeta", num(r.zeta)}, {"samples", r.samples}, {"holds", r.holds},
            {"no_step", r.no_step}, {"fraction", num(r.fraction())}};
  }
  if (n == "nonseparation") {
    const int count = static_cast<int>(P(p, "count", 8));
    NonseparationResult r;
    if (p.contains("K")) {
      r = nonseparation_sequence(need_A(c), need_B(c), need_point(c), PV(p, "vA"), PV(p, "vB"), P(p, "K", 1.0), count);
    } else {
      r = nonseparation_sequence(need_A(c), need_B(c), need_point(c), PV(p, "vA"), PV(p, "vB"), sub_cert(c, p), count);
    }
    Json pts = Json::array();
    for (const auto& x : r.points) pts.push_back(vec_json(x));
    return {{"status", "OK"}, {"epsilon", num(r.epsilon)}, {"points", pts}};
  }
  if (n == "intersection_bouligand" || n == "intersection_clarke") {
    const auto sub = sub_cert(c, p);
    const auto rep = n == "intersection_clarke" ? check_clarke(need_A(c), need_B(c), need_point(c), &sub)
                                                : check_bouligand_derivable(need_A(c), need_B(c), need_point(c), &sub);
    if (rep.verdict == Verdict::Discrepancy || !rep.monotone_ok) ++c.discrepancies;
    if (!rep.table.empty()) c.attachments.push_back({c.s.id + "." + n + ".csv", rep.table_csv()});
    Json j = report_json(rep);
    j["status"] = to_string(rep.verdict);
    return j;
  }
  if (n == "multiplier_rule") {
    const auto prob = need_problem(c);
    const PolyCone Cepi = clarke_cone_convex(prob.epi, prob.base());
    const PolyCone CS = clarke_cone_convex(prob.S, prob.x0);
    return multiplier_json(multiplier_rule(prob, Cepi, CS));
  }
  if (n == "multiplier_rule_massive") return multiplier_json(multiplier_rule_massive(need_problem(c)));
  if (n == "qualification") {
    if (!c.s.qualification) throw Error(ErrorKind::Configuration, "analysis needs a qualification block");
    const auto& q = *c.s.qualification;
    const auto r = qualification_equivalences(SetSpec::epigraph(q.f1), SetSpec::epigraph(q.f2), q.x0);
    if (!r.agree()) ++c.discrepancies;
    return {{"status", r.agree() ? (r.singular ? "QUALIFIED" : "NOT_QUALIFIED") : "DISCREPANCY"},
            {"epigraph_density", r.epigraph_density},
            {"lift_density", r.lift_density},
            {"normal_cones", r.normal_cones},
            {"singular", r.singular}};
  }
  if (n == "chain") {
    const auto r = implication_chain(need_A(c), need_B(c), need_point(c), P(p, "alpha", 0.2), P(p, "delta", 0.5),
                                     c.sampling);
    const bool ok = r.kruger.certified() && r.tangential_valid && r.sub_bounded;
    return {{"status", ok ? "VERIFIED" : (r.kruger.certified() ? "FAILED" : "NOT_TRANSVERSAL")},
            {"kruger", cert_json(r.kruger)},
            {"tangential", {{"M", q_str(r.tangential.M)}, {"eta", q_str(r.tangential.eta)},
                            {"delta", q_str(r.tangential.delta)}, {"valid", r.tangential_valid},
                            {"pairs", r.pairs_checked}}},
            {"subtransversality", {{"K", q_str(r.sub.K)}, {"zeta", q_str(r.sub.zeta)},
                                   {"max_ratio", num(r.max_ratio)}, {"bounded", r.sub_bounded}}}};
  }
  throw Error(ErrorKind::Configuration, "unknown analysis '" + n + "'");
}

}  // namespace

std::string Report::text() const { return doc.dump(2) + "\n"; }

Report run_scenario(const Scenario& s, const RunOptions& opt) {
  if (opt.format != kReportFormat) throw Error(ErrorKind::Configuration, "unsupported report format");
  if (opt.budget && *opt.budget < 0) throw Error(ErrorKind::Configuration, "budget must be nonnegative");
  Context c{s, opt, {}, {}, 0};
  c.sampling.seed = opt.seed ? *opt.seed : s.seed;
  const int budget = opt.budget ? *opt.budget : s.budget;
  if (budget > 0) c.sampling.pairs = budget;

  Report rep;
  Json results = Json::array();
  for (const auto& a : s.analyses) {
    Json entry{{"name", a.name}};
    try {
      Json r = run_analysis(c, a);
      entry["status"] = r.value("status", "OK");
      entry["result"] = std::move(r);
    } catch (const Error& e) {
      entry["status"] = "ERROR";
      entry["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
      ++rep.failures;
    } catch (const std::exception& e) {
      entry["status"] = "ERROR";
      entry["error"] = {{"kind", "internal"}, {"message", e.what()}};
      ++rep.failures;
    }
    results.push_back(std::move(entry));
  }
  rep.discrepancies = c.discrepancies;
  rep.attachments = std::move(c.attachments);
  rep.doc = {{"scenario", s.id},      {"toolkit_version", TVX_VERSION}, {"format", kReportFormat},
             {"seed", c.sampling.seed}, {"analyses", results},          {"discrepancies", rep.discrepancies}};
  return rep;
}

namespace {

void write_atomic(const fs::path& target, const std::string& content) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::Configuration, "cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

}  // namespace

void write_report(const Report& r, const std::string& id, const fs::path& dir) {
  fs::create_directories(dir);
  write_atomic(dir / (id + ".report.json"), r.text());
  for (const auto& a : r.attachments) write_atomic(dir / a.name, a.content);
}

std::string CorpusSummary::table() const {
  std::ostringstream os;
  os << "file,id,discrepancies,verdicts,error\n";
  for (const auto& r : rows)
    os << r.file << ',' << r.id << ',' << r.discrepancies << ',' << r.verdicts << ',' << r.error << '\n';
  return os.str();
}

CorpusSummary run_corpus(const fs::path& dir, const fs::path& out, const RunOptions& opt, int workers) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Configuration, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  CorpusSummary sum;
  sum.rows.resize(files.size());
  std::atomic<size_t> next{0};
  const auto work = [&]() {
    for (size_t i = next++; i < files.size(); i = next++) {
      CorpusRow& row = sum.rows[i];
      row.file = files[i].filename().string();
      try {
        const Scenario s = load_scenario(files[i]);
        row.id = s.id;
        const Report r = run_scenario(s, opt);
        write_report(r, s.id, out);
        row.discrepancies = r.discrepancies;
        std::string v;
        for (const auto& a : r.doc.at("analyses")) {
          if (!v.empty()) v += ';';
          v += a.at("name").get<std::string>() + "=" + a.at("status").get<std::string>();
        }
        row.verdicts = v;
      } catch (const std::exception& e) {
        row.error = e.what();
        std::replace(row.error.begin(), row.error.end(), ',', ';');
      }
    }
  };
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(files.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < w; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& r : sum.rows) sum.discrepancies += r.discrepancies;
  return sum;
}

// ---------------------------------------------------------------------------

ChainResult implication_chain(const SetSpec& A, const SetSpec& B, const Vec& x0, double alpha, double delta,
                              const SamplingOptions& sampling) {
  ChainResult r;
  KrugerOptions ko;
  ko.sampling = sampling;
  r.kruger = certify_transversality_kruger(A, B, x0, alpha, delta, ko);
  r.tangential = transfer_constants_transversal_to_tangential(alpha, delta);
  const double M = r.tangential.M.get_d();
  const double eta = r.tangential.eta.get_d();
  const double d = r.tangential.delta.get_d();
  const auto pairs = sample_pairs(A, B, x0, d, sampling.pairs, sampling.seed);
  const auto val = validate_tangential_constants(A, B, pairs, M, eta, d);
  r.tangential_valid = val.valid;
  r.pairs_checked = val.checked;
  r.sub = transfer_constants_tangential_to_sub(M, eta, d);
  const double zeta = r.sub.zeta.get_d();
  const IntersectionOracle inter(A, B);
  SubtransversalityOptions so;
  so.sampling = sampling;
  for (int k = 0; k < so.levels; ++k) {
    const double radius = zeta * std::ldexp(1.0, -2 * k);
    for (const auto& x : shell_points(A, B, x0, radius, zeta, so)) {
      const double den = distance(A, x) + distance(B, x);
      if (den < so.denom_floor) continue;
      r.max_ratio = std::max(r.max_ratio, inter.distance(x).value / den);
    }
  }
  r.sub_bounded = r.max_ratio <= 1.05 * r.sub.K.get_d();
  return r;
}

std::vector<HilbertRow> hilbert_cube_scaling(int nmax, const SamplingOptions& sampling) {
  if (nmax < 1) throw Error(ErrorKind::Precondition, "hilbert_cube_scaling: nmax must be at least 1");
  if (nmax > 12) throw Error(ErrorKind::Configuration, "hilbert_cube_scaling: nmax above 12 is outside desk scale");
  std::vector<HilbertRow> rows;
  for (int n = 1; n <= nmax; ++n) {
    Vec lo(n), hi(n), u(n);
    for (int i = 0; i < n; ++i) {
      hi[i] = 1.0 / (i + 1);
      lo[i] = -hi[i];
      u[i] = std::pow(i + 1.0, -0.75);
    }
    const SetSpec A = SetSpec::box(lo, hi);
    Mat N(0, n);
    if (n > 1) {
      Eigen::JacobiSVD<Mat> svd(u.transpose(), Eigen::ComputeFullV);
      N = svd.matrixV().rightCols(n - 1).transpose();
    }
    const SetSpec B = SetSpec::polyhedron(-u.transpose(), Vec::Zero(1), N, Vec::Zero(N.rows()));
    const Vec x0 = Vec::Zero(n);
    HilbertRow row;
    row.n = n;
    row.status = "OK";
    try {
      SubtransversalityOptions o;
      o.sampling = sampling;
      const auto c = estimate_subtransversality_constant(A, B, x0, 1.0, o);
      row.K_shell = c.constants.count("K") ? c.constants.at("K") : 0.0;
      if (c.refuted()) row.status = "REFUTED";
    } catch (const Error&) {
      row.status = "BUDGET";
    }
    // The ray leaves the cube at lambda* = min_i i^{-1/4} = n^{-1/4}.
    const double lstar = std::pow(static_cast<double>(n), -0.25);
    const IntersectionOracle inter(A, B);
    for (int k = 1; k <= 12; ++k) {
      const Vec x = lstar * (1.0 + std::ldexp(1.0, -k)) * u;
      const double den = distance(A, x) + distance(B, x);
      if (den < 1e-12) continue;
      row.K_ray = std::max(row.K_ray, inter.distance(x).value / den);
    }
    row.K = std::max(row.K_shell, row.K_ray);
    rows.push_back(row);
  }
  return rows;
}

std::string hilbert_csv(const std::vector<HilbertRow>& rows) {
  std::ostringstream os;
  os << "n,K,K_shell,K_ray,status\n";
  for (const auto& r : rows) {
    os << r.n << ',' << num(r.K).dump() << ',' << num(r.K_shell).dump() << ',' << num(r.K_ray).dump() << ','
       << r.status << '\n';
  }
  return os.str();
}

}  // namespace tvx
