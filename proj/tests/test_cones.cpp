#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tvx/cones.hpp"
#include "tvx/sampling.hpp"

using namespace tvx;
using oracle::v2;
using oracle::v3;

TEST_CASE("polar of the nonnegative quadrant is the nonpositive quadrant") {
  const auto Q = PolyCone::from_generators(2, {v2(1, 0), v2(0, 1)});
  const auto P = polar(Q);
  CHECK(P.contains(v2(-1, -3)));
  CHECK_FALSE(P.contains(v2(1, -3)));
  CHECK(polar(P) == Q);
}

TEST_CASE("bipolar property on random cones") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec> gens;
    for (int k = 0; k < 4; ++k) gens.push_back(oracle::random_unit(rng, 3));
    const auto C = PolyCone::from_generators(3, gens);
    CHECK(polar(polar(C)) == C);
    // every generator pairs nonpositively with every polar generator
    for (const auto& g : C.generators())
      for (const auto& h : polar(C).generators()) CHECK(g.dot(h) <= 1e-12);
  }
}

TEST_CASE("halfspace and generator descriptions agree") {
  const auto H = PolyCone::from_halfspaces(2, {v2(0, 1)});
  const auto G = PolyCone::from_generators(2, {v2(1, 0), v2(-1, 0), v2(0, -1)});
  CHECK(H == G);
  CHECK(H.span_dim() == 2);
  CHECK_FALSE(H.is_full());
}

TEST_CASE("sum, difference, intersection and product") {
  const auto x = PolyCone::from_generators(2, {v2(1, 0)});
  const auto y = PolyCone::from_generators(2, {v2(0, 1)});
  const auto s = cone_sum(x, y);
  CHECK(s.contains(v2(2, 3)));
  CHECK_FALSE(s.contains(v2(-1, 3)));
  CHECK(cone_diff(x, y).contains(v2(1, -1)));
  CHECK(cone_intersect(x, y).is_zero());
  CHECK(x.subset_of(s));
  CHECK_FALSE(s.subset_of(x));
  const auto p = cone_product(x, nonpositive_halfline());
  CHECK(p.dim() == 3);
  CHECK(p.contains(v3(2, 0, -1)));
  CHECK_FALSE(p.contains(v3(2, 0, 1)));
  CHECK(negate(x).contains(v2(-5, 0)));
}

TEST_CASE("dense difference: opposite halfplanes are dense, identical halfplanes are not") {
  const auto lower = PolyCone::from_halfspaces(2, {v2(0, 1)});
  const auto upper = PolyCone::from_halfspaces(2, {v2(0, -1)});
  const auto d1 = is_dense_difference(lower, upper);
  CHECK_FALSE(d1.dense);
  REQUIRE(d1.witness);
  // the witness lies in polar(C1) and in -polar(C2)
  CHECK(polar(lower).contains(*d1.witness));
  CHECK(negate(polar(upper)).contains(*d1.witness));
  CHECK((d1.witness->normalized() - v2(0, 1)).norm() < 1e-12);

  CHECK(is_dense_difference(lower, lower).dense);
  CHECK(is_dense_difference(PolyCone::full(2), PolyCone::zero(2)).dense);
}

TEST_CASE("cone projection satisfies the Moreau decomposition") {
  std::mt19937_64 rng(4);
  const auto C = PolyCone::from_generators(3, {v3(1, 0, 0), v3(1, 1, 0), v3(0, 1, 1)});
  const auto P = polar(C);
  for (int k = 0; k < 25; ++k) {
    const Vec v = 2.0 * oracle::random_unit(rng, 3);
    const Vec pc = project_onto_cone(C, v);
    const Vec pp = project_onto_cone(P, v);
    CHECK((pc + pp - v).norm() < 1e-8);
    CHECK(std::abs(pc.dot(pp)) < 1e-8);
    CHECK(distance_to_cone(C, v) == doctest::Approx(pp.norm()).epsilon(1e-8));
  }
}

TEST_CASE("polyhedral tangent cone matches the active-constraint oracle") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat A = oracle::random_normals(rng, 5, 2);
    Vec b = Vec::Ones(5);
    b[0] = 0.0;
    b[1] = 0.0;  // two constraints active at the origin
    const auto S = SetSpec::polyhedron(A, b);
    const Vec x0 = Vec::Zero(2);
    if (!member(S, x0)) continue;
    const auto T = tangent_cone_polyhedral(S, x0);
    for (const auto& v : circle_net(72))
      CHECK(T.contains(v, 1e-9) == oracle::polyhedral_tangent_contains(A, b, x0, v));
  }
}

TEST_CASE("Clarke cone of a ball at a boundary point is a halfplane") {
  const auto B = SetSpec::ball(v2(0, 0), 1.0);
  const auto T = clarke_cone_convex(B, v2(1, 0));
  CHECK(T.contains(v2(0, 1)));
  CHECK(T.contains(v2(-1, 0)));
  CHECK_FALSE(T.contains(v2(1, 0.1)));
  CHECK(clarke_cone_convex(B, v2(0.2, 0)).is_full());
}

TEST_CASE("sampled tangent cone of the unit circle at (1,0)") {
  Quadratic q{Mat::Identity(2, 2), Vec::Zero(2), -1.0};
  const auto C = SetSpec::quadratic_level_set(q, LevelSense::Equal);
  const auto up = classify_direction(C, v2(1, 0), v2(0, 1));
  CHECK(up.bouligand == Membership::In);
  CHECK(up.derivable == Membership::In);
  const auto out = classify_direction(C, v2(1, 0), v2(1, 0));
  CHECK(out.bouligand == Membership::Out);
  const auto sc = tangent_cone_sampled(C, v2(1, 0), 36);
  CHECK(sc.directions.size() == 36);
}

TEST_CASE("tangent grid halves and stops at the floor") {
  const auto g = tangent_grid();
  REQUIRE(g.size() > 2);
  CHECK(g.front() == 0.5);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(g[i - 1] / 2));
  CHECK(g.back() >= 1e-8);
}
