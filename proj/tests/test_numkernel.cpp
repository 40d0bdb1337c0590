#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tvx/error.hpp"
#include "tvx/numkernel.hpp"
#include "tvx/sampling.hpp"

using namespace tvx;
using oracle::v2;

TEST_CASE("lp: simplex corner") {
  LpProblem p;
  p.c = v2(-1, -1);
  p.A_ub = Mat(1, 2);
  p.A_ub << 1, 1;
  p.b_ub = Vec::Constant(1, 1.0);
  p.lower = Vec::Zero(2);
  const auto r = lp_solve(p);
  REQUIRE(r.optimal());
  CHECK(r.value == doctest::Approx(-1.0));
  CHECK(std::abs(r.duality_gap(p)) < 1e-9);
}

TEST_CASE("lp: infeasible and unbounded are statuses") {
  LpProblem inf;
  inf.c = Vec::Constant(1, 1.0);
  inf.A_ub = Mat::Constant(1, 1, 1.0);
  inf.b_ub = Vec::Constant(1, -1.0);
  inf.lower = Vec::Zero(1);
  CHECK(lp_solve(inf).status == LpStatus::Infeasible);

  LpProblem unb;
  unb.c = Vec::Constant(1, -1.0);
  unb.lower = Vec::Zero(1);
  CHECK(lp_solve(unb).status == LpStatus::Unbounded);
}

TEST_CASE("lp: strong duality and stationarity on random bounded problems") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3, m = 5;
    LpProblem p;
    p.c = Vec(n);
    p.A_ub = Mat(m, n);
    p.b_ub = Vec::Constant(m, 1.0);
    for (int j = 0; j < n; ++j) p.c[j] = U(rng);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) p.A_ub(i, j) = U(rng);
    p.lower = Vec::Constant(n, -2.0);
    p.upper = Vec::Constant(n, 2.0);
    const auto r = lp_solve(p);
    REQUIRE(r.optimal());
    CHECK(std::abs(r.duality_gap(p)) < 1e-7);
    const Vec st = p.c + p.A_ub.transpose() * r.dual_ub + r.dual_upper - r.dual_lower;
    CHECK(st.norm() < 1e-7);
    CHECK((r.dual_ub.array() >= -1e-12).all());
  }
}

TEST_CASE("qp: projection onto a box equals clamping") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  Mat A(6, 3);
  A << Mat::Identity(3, 3), -Mat::Identity(3, 3);
  const Vec b = Vec::Ones(6);
  for (int k = 0; k < 30; ++k) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = U(rng);
    const Vec p = project_polyhedron(x, A, b);
    CHECK((p - x.cwiseMax(-1.0).cwiseMin(1.0)).norm() < 1e-9);
  }
}

TEST_CASE("qp: projection satisfies the obtuse-angle characterization") {
  std::mt19937_64 rng(9);
  const Mat A = oracle::random_normals(rng, 7, 2);
  const Vec b = Vec::Ones(7);
  std::vector<Vec> inside;
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  while (inside.size() < 200) {
    const Vec y = v2(U(rng), U(rng));
    if (((A * y - b).array() <= 0).all()) inside.push_back(y);
  }
  for (int k = 0; k < 20; ++k) {
    const Vec x = v2(3 * U(rng), 3 * U(rng));
    const Vec p = project_polyhedron(x, A, b);
    CHECK(((A * p - b).array() <= 1e-9).all());
    CHECK(oracle::obtuse_against(x, p, inside));
  }
}

TEST_CASE("qp: empty feasible set throws Infeasible") {
  Mat A(2, 1);
  A << 1, -1;
  const Vec b = v2(-1, -1);
  CHECK_THROWS_AS(project_polyhedron(Vec::Zero(1), A, b), Error);
  try {
    project_polyhedron(Vec::Zero(1), A, b);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("norms: max-product") {
  Vec x(3);
  x << 3, 4, -2;
  CHECK(norm(x, NormKind::max_product(2)) == doctest::Approx(5.0));
  x[2] = -7;
  CHECK(norm(x, NormKind::max_product(2)) == doctest::Approx(7.0));
  CHECK(norm(x) == doctest::Approx(std::sqrt(74.0)));
}

TEST_CASE("sampling: deterministic and unit") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  for (const auto& v : circle_net(720)) CHECK(std::abs(v.norm() - 1.0) < 1e-12);
  for (const auto& v : fibonacci_sphere(2000)) CHECK(std::abs(v.norm() - 1.0) < 1e-12);
  CHECK(direction_net(5, 40).size() >= 40);
  Rng c(7);
  for (int i = 0; i < 50; ++i) CHECK(c.in_ball(Vec::Zero(3), 0.5).norm() <= 0.5 + 1e-12);
}
