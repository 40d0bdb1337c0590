#include <doctest.h>

#include "oracles.hpp"
#include "tvx/gapreduce.hpp"

using namespace tvx;
using oracle::v2;

namespace {

SetSpec line_at(double theta) { return SetSpec::line(Vec::Zero(2), oracle::unit_angle(theta)); }

}  // namespace

TEST_CASE("opposite halfplanes: one step onto the shared boundary") {
  const auto A = SetSpec::halfspace(v2(0, 1), 0.0);   // y <= 0
  const auto B = SetSpec::halfspace(v2(0, -1), 0.0);  // y >= 0
  const auto tr = gap_reduction_solve(A, B, Vec::Zero(2), v2(0, -1), v2(0, 1), 1.0, 2.0, 4.0, 1e-8);
  CHECK(tr.status == GapStatus::Converged);
  REQUIRE(tr.xAB);
  CHECK(tr.xAB->norm() < 1e-8);
  CHECK(tr.distA <= tr.bound + 1e-12);
  CHECK(tr.distB <= tr.bound + 1e-12);
  CHECK(tr.invariants_ok());
  CHECK(check_trace(tr).empty());
}

TEST_CASE("crossing lines converge to the origin within the terminal bound") {
  for (double deg : {20.0, 45.0, 90.0}) {
    const double th = deg * oracle::kPi / 180.0;
    const auto A = line_at(0.0);
    const auto B = line_at(th);
    const Vec xA = v2(0.05, 0.0);
    const Vec xB = 0.03 * oracle::unit_angle(th);
    const double M = 1.0 + 1.0 / std::sin(th);
    const double eta = 0.5 * std::sin(th);
    const auto tr = gap_reduction_solve(A, B, Vec::Zero(2), xA, xB, M, eta, 1.0, 1e-8);
    CHECK(tr.status == GapStatus::Converged);
    REQUIRE(tr.xAB);
    // the only common point is the origin
    CHECK(oracle::line_distance(*tr.xAB, oracle::unit_angle(0.0)) < 1e-8);
    CHECK(oracle::line_distance(*tr.xAB, oracle::unit_angle(th)) < 1e-8);
    CHECK(tr.distA <= tr.bound + 1e-12);
    CHECK(tr.invariants_ok());
    for (std::size_t k = 1; k < tr.gaps.size(); ++k) CHECK(tr.gaps[k] <= tr.gaps[k - 1] + 1e-15);
  }
}

TEST_CASE("trace checker flags a tampered trace") {
  const auto A = line_at(0.0);
  const auto B = line_at(oracle::kPi / 2);
  auto tr = gap_reduction_solve(A, B, Vec::Zero(2), v2(0.1, 0), v2(0, 0.1), 2.0, 0.5, 1.0, 1e-8);
  REQUIRE(check_trace(tr).empty());
  REQUIRE(tr.xA.size() > 1);
  tr.xA.back() = v2(5, 0);
  CHECK_FALSE(check_trace(tr).empty());
}

TEST_CASE("trace csv has a header and one row per iterate") {
  const auto tr = gap_reduction_solve(line_at(0.0), line_at(1.0), Vec::Zero(2), v2(0.1, 0),
                                      0.1 * oracle::unit_angle(1.0), 3.0, 0.3, 1.0, 1e-6);
  const auto csv = tr.to_csv();
  CHECK(csv.rfind("k,t_k,gap_k,tbar_k,drift_k\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == tr.gaps.size() + 1);
}

TEST_CASE("admissible radius is exact and rejects bad input") {
  CHECK(admissible_radius(2.0, 1.0, 5.0) == mpq_class(1));
  CHECK(admissible_radius(1.0, 1.0, 3.0) == mpq_class(1));
  CHECK(admissible_radius(1.0, 2.0, 1.0) == mpq_class(1, 2));
  CHECK_THROWS_AS(admissible_radius(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(admissible_radius(1.0, 1.0, kInf), Error);
}

TEST_CASE("nonseparation sequence lies in A and B and tracks t vA") {
  const auto A = SetSpec::halfspace(v2(0, 1), 0.0);
  const auto B = SetSpec::halfspace(v2(0, -1), 0.0);
  const Vec vA = v2(1, 0), vB = v2(1, 0.1).normalized();
  const auto r = nonseparation_sequence(A, B, Vec::Zero(2), vA, vB, 2.0, 6);
  REQUIRE(r.points.size() == 6);
  for (std::size_t m = 0; m < r.points.size(); ++m) {
    CHECK(member(A, r.points[m], 1e-9));
    CHECK(member(B, r.points[m], 1e-9));
    CHECK(r.points[m].norm() > 0.0);
    CHECK((r.points[m] - r.t[m] * vA).norm() <= r.bound[m] + 1e-12);
  }
  for (std::size_t m = 1; m < r.t.size(); ++m) CHECK(r.t[m] < r.t[m - 1]);
}

TEST_CASE("nonseparation refuses a non-certified certificate") {
  TransversalityCertificate c;
  c.status = CertStatus::Inconclusive;
  c.constants["K"] = 1.0;
  CHECK_THROWS_AS(nonseparation_sequence(SetSpec::whole_space(2), SetSpec::whole_space(2), Vec::Zero(2), v2(1, 0),
                                         v2(1, 0), c, 3),
                  Error);
}

TEST_CASE("product unit vectors for {s >= v} against the whole line") {
  const auto C1 = PolyCone::from_halfspaces(2, {v2(1, -1)});
  const auto C2 = PolyCone::full(1);
  for (double eps : {0.5, 0.1, 0.02}) {
    const auto p = product_unit_vectors(C1, C2, eps);
    CHECK(std::abs(p.w1.norm() - 1.0) <= 1e-12);
    CHECK(std::abs(p.w2.norm() - 1.0) <= 1e-12);
    CHECK(p.distance < eps);
    CHECK(C1.contains(p.w1.joined()));
    CHECK(p.w2.r <= 0.0);
    // independent recomputation of the max-product distance
    const double d = std::max((p.w1.x - p.w2.x).norm(), std::abs(p.w1.r - p.w2.r));
    CHECK(d == doctest::Approx(p.distance));
  }
}

TEST_CASE("metric form holds for perpendicular lines") {
  const auto r = check_metric_form(line_at(0.0), line_at(oracle::kPi / 2), Vec::Zero(2), 2.0, 0.5, 0.5, 20);
  CHECK(r.samples == 20);
  CHECK(r.fraction() == doctest::Approx(1.0));
  CHECK(r.zeta == doctest::Approx(0.25));
}
