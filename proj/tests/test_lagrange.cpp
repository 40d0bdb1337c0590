#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tvx/lagrange.hpp"

using namespace tvx;
using oracle::v2;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

}  // namespace

TEST_CASE("separation of a halfplane from a downward ball") {
  const auto C = PolyCone::from_halfspaces(2, {v2(0, -1)});  // {y >= 0}
  const auto s = separate_cones(C, v2(0, -1), 0.5);
  REQUIRE(s);
  CHECK((s->xi - v2(0, 1)).norm() < 1e-9);
  CHECK(s->margin > 0.0);
  for (const auto& g : C.generators()) CHECK(s->xi.dot(g) >= -1e-12);
  CHECK_FALSE(separate_cones(PolyCone::full(2), v2(0, -1), 0.5));
  CHECK_FALSE(separate_cones(C, v2(1, 0), 0.5));  // ball meets C
}

TEST_CASE("min x over [0, inf): normal multiplier matches the LP dual") {
  Mat A(1, 1);
  A << -1.0;
  const auto S = SetSpec::polyhedron(A, v1(0.0));
  const auto f = PolyFunction::affine(v1(1.0), 0.0);
  const auto p = OptProblem::make(f, S, v1(0.0));
  const auto out = multiplier_rule_massive(p);
  REQUIRE(out.has_multiplier());
  CHECK(out.checks.all());
  CHECK(out.pair->eta == 1.0);
  CHECK(out.pair->xi[0] == doctest::Approx(-1.0));
  const auto res = kkt_residual(v1(1.0), S, v1(0.0), *out.pair);
  REQUIRE(res);
  CHECK(*res < 1e-9);
}

TEST_CASE("random LPs: every vertex optimum yields a verified multiplier") {
  std::mt19937_64 rng(31);
  int tried = 0;
  for (int trial = 0; trial < 30 && tried < 8; ++trial) {
    // box [-1,1]^2 plus a random cut; minimize a random direction
    const Vec c = oracle::random_unit(rng, 2);
    Mat A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    const auto S = SetSpec::polyhedron(A, Vec::Ones(4));
    // the minimizer of c.x over the box is the corner -sign(c)
    const Vec x0 = v2(c[0] > 0 ? -1 : 1, c[1] > 0 ? -1 : 1);
    const auto p = OptProblem::make(PolyFunction::affine(c, 0.0), S, x0);
    const auto out = multiplier_rule_massive(p);
    REQUIRE(out.has_multiplier());
    CHECK(out.checks.all());
    CHECK(out.pair->eta == 1.0);
    const auto res = kkt_residual(c, S, x0, *out.pair);
    REQUIRE(res);
    CHECK(*res < 1e-8);
    ++tried;
  }
  CHECK(tried == 8);
}

TEST_CASE("not a minimizer: dense verdict with a descent direction") {
  Mat A(1, 1);
  A << -1.0;
  const auto S = SetSpec::polyhedron(A, v1(0.0));
  const auto p = OptProblem::make(PolyFunction::affine(v1(-1.0), 0.0), S, v1(0.0));  // min -x
  const auto out = multiplier_rule_massive(p);
  CHECK_FALSE(out.has_multiplier());
  REQUIRE(out.dense);
  CHECK(out.dense->message.find("not a local minimizer") != std::string::npos);
  REQUIRE(out.dense->descent);
  const Vec d = *out.dense->descent;
  CHECK(d[0] > 0.0);   // feasible move
  CHECK(d[1] < 0.0);   // strictly decreasing
}

TEST_CASE("abnormal multiplier for a degenerate constraint") {
  // S = {0} in R, f(x) = -x: C_S = {0} so every xi works with eta = 0
  const auto S = SetSpec::point(v1(0.0));
  const auto p = OptProblem::make(PolyFunction::affine(v1(-1.0), 0.0), S, v1(0.0));
  const auto out = multiplier_rule_massive(p);
  REQUIRE(out.has_multiplier());
  CHECK(out.checks.all());
}

TEST_CASE("verify_multiplier rejects wrong signs") {
  const auto CS = PolyCone::from_halfspaces(1, {v1(-1.0)});  // [0, inf)
  const auto Cepi = PolyCone::from_halfspaces(2, {v2(1, -1)});
  MultiplierPair bad{v1(1.0), 1.0};
  CHECK_FALSE(verify_multiplier(bad, Cepi, CS).all());
  MultiplierPair zero{v1(0.0), 0.0};
  CHECK_FALSE(verify_multiplier(zero, Cepi, CS).nonzero);
}

TEST_CASE("qualification conditions agree") {
  const auto abs1 = SetSpec::epigraph(PolyFunction::l1_norm(1));
  Mat A(1, 1);
  A << -1.0;
  const auto ind = SetSpec::epigraph(PolyFunction::indicator(A, v1(0.0)));
  Mat B(1, 1);
  B << 1.0;
  const auto ind2 = SetSpec::epigraph(PolyFunction::indicator(B, v1(0.0)));
  const auto q1 = qualification_equivalences(abs1, abs1, v1(0.0));
  CHECK(q1.agree());
  CHECK(q1.epigraph_density);
  const auto q2 = qualification_equivalences(ind, ind2, v1(0.0));
  CHECK(q2.agree());
  CHECK_FALSE(q2.singular);
  CHECK(qualification_equivalences(abs1, ind, v1(0.0)).agree());
}

TEST_CASE("strong minimum transform keeps the cones") {
  Mat A(1, 1);
  A << -1.0;
  const auto S = SetSpec::polyhedron(A, v1(0.0));
  const auto p = OptProblem::make(PolyFunction::affine(v1(1.0), 0.0), S, v1(0.0));
  const auto sm = strong_minimum_transform(p, 16);
  CHECK(sm.directions == 16);
  CHECK(sm.cone_agreement >= 0.9);
}

TEST_CASE("make rejects infeasible base points") {
  Mat A(1, 1);
  A << -1.0;
  const auto S = SetSpec::polyhedron(A, v1(0.0));
  CHECK_THROWS_AS(OptProblem::make(PolyFunction::affine(v1(1.0), 0.0), S, v1(-1.0)), Error);
}
