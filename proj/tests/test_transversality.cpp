#include <doctest.h>

#include "oracles.hpp"
#include "tvx/transversality.hpp"

using namespace tvx;
using oracle::v2;

namespace {

SetSpec line_at(double theta) { return SetSpec::line(Vec::Zero(2), oracle::unit_angle(theta)); }

}  // namespace

TEST_CASE("transfers are exact rationals") {
  const auto t = transfer_constants_transversal_to_tangential(0.5, 0.25);
  CHECK(t.M == mpq_class(3, 2));
  CHECK(t.eta == mpq_class(1, 2));
  CHECK(t.delta == mpq_class(1, 4));
  const auto s = transfer_constants_tangential_to_sub(1.0, 2.0, 1.0);
  CHECK(s.K == mpq_class(3, 2));
  CHECK(s.zeta == mpq_class(1, 4));
  // 0.1 is not 1/10 in binary; the transfer keeps the binary value
  const auto u = transfer_constants_transversal_to_tangential(0.1, 1.0);
  CHECK(u.eta != mpq_class(1, 10));
  CHECK(u.eta.get_d() == 0.1);
}

TEST_CASE("transfers reject nonpositive inputs") {
  CHECK_THROWS_AS(transfer_constants_tangential_to_sub(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(transfer_constants_transversal_to_tangential(-1.0, 1.0), Error);
}

TEST_CASE("subtransversality constant of two lines against brute force and 1/sin") {
  for (double deg : {30.0, 60.0, 90.0}) {
    const double th = deg * oracle::kPi / 180.0;
    const auto c = estimate_subtransversality_constant(line_at(0.0), line_at(th), Vec::Zero(2), 0.5);
    const double K = c.constants.at("K");
    const double bf = oracle::brute_force_line_K(th);
    CHECK(K == doctest::Approx(bf).epsilon(0.1));
    CHECK(K == doctest::Approx(1.0 / std::sin(th)).epsilon(0.1));
    CHECK_FALSE(c.exact);
  }
}

TEST_CASE("Kruger criterion: perpendicular lines certified, tangent disks refuted") {
  KrugerOptions o;
  o.sampling.pairs = 8;
  o.sampling.directions = 8;
  o.sampled_fallback = true;
  const auto ok = certify_transversality_kruger(line_at(0.0), line_at(oracle::kPi / 2), Vec::Zero(2), 0.3, 0.5, o);
  CHECK(ok.certified());

  const auto d1 = SetSpec::ball(v2(-1, 0), 1.0);
  const auto d2 = SetSpec::ball(v2(1, 0), 1.0);
  const auto bad = certify_transversality_kruger(d1, d2, Vec::Zero(2), 0.3, 0.5, o);
  CHECK(bad.refuted());
  CHECK_FALSE(bad.witnesses.empty());
}

TEST_CASE("step oracle: verified steps reduce the gap at rate eta") {
  const auto A = line_at(0.0);
  const auto B = line_at(oracle::kPi / 2);
  const Vec xA = v2(0.2, 0.0), xB = v2(0.0, 0.1);
  const double gap = (xA - xB).norm();
  const auto grid = step_grid(0.5, gap, 0.5);
  REQUIRE_FALSE(grid.empty());
  CHECK(grid.front() <= std::min(0.5, gap / 0.5) + 1e-15);
  const auto s = tangential_step_oracle(A, B, xA, xB, 2.0, 0.5, grid);
  REQUIRE(s);
  CHECK(verify_step(A, B, xA, xB, 2.0, 0.5, *s));
  CHECK(s->decrease() >= 0.5 * s->t - 1e-9);
}

TEST_CASE("validation grid uses every fourth step") {
  const auto full = step_grid(1.0, 1.0, 1.0);
  const auto v = validation_grid(1.0, 1.0, 1.0, 3);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == full[4]);
  CHECK(v[1] == full[8]);
  CHECK(v[2] == full[12]);
}

TEST_CASE("sampled pairs stay in the sets and near x0") {
  const auto A = line_at(0.0);
  const auto B = line_at(1.0);
  const auto pairs = sample_pairs(A, B, Vec::Zero(2), 0.25, 30, 99);
  CHECK(pairs.size() == 30);
  for (const auto& p : pairs) {
    CHECK(distance(A, p.xA) < 1e-9);
    CHECK(distance(B, p.xB) < 1e-9);
    CHECK(p.xA.norm() <= 0.25 + 1e-12);
    CHECK(p.xB.norm() <= 0.25 + 1e-12);
  }
  // same seed, same pairs
  const auto again = sample_pairs(A, B, Vec::Zero(2), 0.25, 30, 99);
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(pairs[i].xA == again[i].xA);
}

TEST_CASE("Dykstra projects onto the intersection") {
  const auto H1 = SetSpec::halfspace(v2(1, 0), 0.0);
  const auto H2 = SetSpec::halfspace(v2(0, 1), 0.0);
  const Vec p = dykstra({H1, H2}, v2(2, 3));
  CHECK(p.norm() < 1e-9);
  IntersectionOracle o(H1, H2);
  CHECK(o.exact());
  CHECK(o.distance(v2(3, 4)).value == doctest::Approx(5.0));
}

TEST_CASE("massive dense: halfplanes through the origin meeting at an angle") {
  const auto A = SetSpec::halfspace(v2(0, 1), 0.0);
  const auto B = SetSpec::halfspace(v2(1, 0), 0.0);
  TangentialOptions o;
  o.sampling.pairs = 6;
  const auto c = certify_massive_dense(A, B, Vec::Zero(2), o);
  CHECK(c.certified());
}

TEST_CASE("alternating projections: linear for transversal lines, sublinear for tangent disks") {
  const auto r = altproj_rate(line_at(0.0), line_at(0.5), v2(1, 1), 60);
  REQUIRE(r.rate);
  CHECK(*r.rate < 1.0);
  CHECK_FALSE(r.sublinear);

  const auto d = altproj_rate(SetSpec::ball(v2(-1, 0), 1.0), SetSpec::ball(v2(1, 0), 1.0), v2(0, 1), 400);
  CHECK(d.sublinear);
}

TEST_CASE("errors: x0 outside the intersection") {
  CHECK_THROWS_AS(estimate_tangential_constants(line_at(0.0), line_at(1.0), v2(1, 1)), Error);
}
