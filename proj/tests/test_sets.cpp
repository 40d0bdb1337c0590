#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tvx/error.hpp"
#include "tvx/sets.hpp"

using namespace tvx;
using oracle::v2;
using oracle::v3;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Parse;
}

}  // namespace

TEST_CASE("ball: distance and projection are closed form") {
  const auto B = SetSpec::ball(v2(1, 0), 1.0);
  CHECK(distance(B, v2(4, 4)) == doctest::Approx(4.0));
  CHECK((project(B, v2(4, 4)) - v2(1.6, 0.8)).norm() < 1e-12);
  CHECK(distance(B, v2(1, 0.5)) == 0.0);
  CHECK(member(B, v2(0, 0)));
  CHECK_FALSE(member(B, v2(-0.1, 0)));
}

TEST_CASE("line and point") {
  const auto L = SetSpec::line(Vec::Zero(2), v2(1, 1));
  CHECK(distance(L, v2(1, -1)) == doctest::Approx(std::sqrt(2.0)));
  CHECK((project(L, v2(2, 0)) - v2(1, 1)).norm() < 1e-12);
  const auto P = SetSpec::point(v3(1, 2, 3));
  CHECK(distance(P, Vec::Zero(3)) == doctest::Approx(std::sqrt(14.0)));
}

TEST_CASE("polyhedron projection property: random points") {
  std::mt19937_64 rng(3);
  const Mat A = oracle::random_normals(rng, 6, 3);
  const auto S = SetSpec::polyhedron(A, Vec::Ones(6));
  std::uniform_real_distribution<double> U(-3, 3);
  for (int k = 0; k < 30; ++k) {
    const Vec x = v3(U(rng), U(rng), U(rng));
    const Vec p = project(S, x);
    CHECK(member(S, p, 1e-8));
    CHECK(distance(S, x) == doctest::Approx((x - p).norm()).epsilon(1e-9));
    // a projection is idempotent
    CHECK((project(S, p) - p).norm() < 1e-8);
  }
}

TEST_CASE("box and whole space") {
  const auto Bx = SetSpec::box(v2(-1, -2), v2(1, 2));
  CHECK(distance(Bx, v2(3, 0)) == doctest::Approx(2.0));
  CHECK(distance(SetSpec::whole_space(4), Vec::Constant(4, 9.0)) == 0.0);
}

TEST_CASE("translate shifts distances") {
  const auto S = SetSpec::translate(SetSpec::ball(Vec::Zero(2), 1.0), v2(3, 0));
  CHECK(distance(S, v2(3, 2)) == doctest::Approx(1.0));
  CHECK(S.exact_projection());
}

TEST_CASE("union takes the nearest member") {
  const auto U = SetSpec::union_of({SetSpec::point(v2(0, 0)), SetSpec::point(v2(4, 0))});
  CHECK(distance(U, v2(3, 0)) == doctest::Approx(1.0));
  CHECK((project(U, v2(3, 0)) - v2(4, 0)).norm() < 1e-12);
}

TEST_CASE("product distance under the max-product norm") {
  const auto P = SetSpec::product({SetSpec::point(v2(0, 0)), SetSpec::point(Vec::Zero(1))});
  Vec x(3);
  x << 3, 4, -2;
  CHECK(distance(P, x) == doctest::Approx(std::sqrt(29.0)));
  CHECK(distance(P, x, NormKind::max_product(2)) == doctest::Approx(5.0));
}

TEST_CASE("epigraph of |x|") {
  const auto E = SetSpec::epigraph(PolyFunction::l1_norm(1));
  CHECK(member(E, v2(0.5, 1.0)));
  CHECK_FALSE(member(E, v2(2.0, 1.0)));
  CHECK(distance(E, v2(0, -1)) == doctest::Approx(1.0));
  CHECK(distance(E, v2(2, 0)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(polyhedral_form(E).has_value());
}

TEST_CASE("quadratic level set: approximate projection onto the unit circle") {
  Quadratic q{Mat::Identity(2, 2), Vec::Zero(2), -1.0};
  const auto C = SetSpec::quadratic_level_set(q, LevelSense::Equal);
  const auto r = project_approx(C, v2(2, 0));
  CHECK(r.distance == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(kind_of([&] { project(C, v2(2, 0)); }) == ErrorKind::Unsupported);
}

TEST_CASE("intersect: polyhedra, touching balls and disjoint balls") {
  const auto H1 = SetSpec::halfspace(v2(0, 1), 0.0);
  const auto H2 = SetSpec::halfspace(v2(0, -1), 0.0);
  const auto I = intersect(H1, H2);
  CHECK(member(I, v2(5, 0)));
  CHECK_FALSE(member(I, v2(0, 0.1)));
  // operand order does not change the result
  CHECK(describe(intersect(H1, H2)) == describe(intersect(H2, H1)));

  const auto T = intersect(SetSpec::ball(v2(-1, 0), 1.0), SetSpec::ball(v2(1, 0), 1.0));
  CHECK(distance(T, v2(0, 3)) == doctest::Approx(3.0));

  CHECK(kind_of([] { intersect(SetSpec::ball(v2(-2, 0), 0.5), SetSpec::ball(v2(2, 0), 0.5)); }) ==
        ErrorKind::Infeasible);
  CHECK(kind_of([] { intersect(SetSpec::ball(v2(-0.5, 0), 1.0), SetSpec::ball(v2(0.5, 0), 1.0)); }) ==
        ErrorKind::Unsupported);
}

TEST_CASE("errors: dimension mismatch and bad dilation") {
  CHECK(kind_of([] { distance(SetSpec::ball(v2(0, 0), 1.0), v3(0, 0, 0)); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([] { dilate(SetSpec::ball(v2(0, 0), 1.0), 0.0); }) == ErrorKind::Precondition);
  CHECK(kind_of([] { point_in_set(SetSpec::ball(v2(0, 0), 1.0), v2(3, 0)); }) == ErrorKind::Precondition);
}

TEST_CASE("dilate scales distances") {
  const auto S = SetSpec::halfspace(v2(1, 0), 1.0);
  CHECK(distance(dilate(S, 2.0), v2(4, 0)) == doctest::Approx(2.0));
}
