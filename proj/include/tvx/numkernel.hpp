#pragma once

// Dense numeric substrate: vectors, the two norms used by the toolkit, a small
// simplex LP solver and an active-set QP solver for polyhedral projection.

#include <Eigen/Dense>

#include <limits>
#include <optional>

#include "tvx/error.hpp"

namespace tvx {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Feasibility and optimality tolerances shared by every operation.
struct Tolerances {
  double feasibility = 1e-9;
  double optimality = 1e-7;
};

/// Euclidean norm, or max{||x||_2, |r|} on X x R where x = coords[0, split)
/// and r is the trailing scalar block.
struct NormKind {
  enum class Kind { Euclidean, MaxProduct };
  Kind kind = Kind::Euclidean;
  int split = 0;

  static NormKind euclidean() { return {}; }
  static NormKind max_product(int split) { return {Kind::MaxProduct, split}; }
};

double norm(const Vec& v, const NormKind& kind = NormKind::euclidean());
double dist(const Vec& a, const Vec& b, const NormKind& kind = NormKind::euclidean());

void require_dim(const Vec& v, Eigen::Index dim, const char* what);
void require_finite(const Vec& v, const char* what);

// ---------------------------------------------------------------------------
// Linear programming

/// min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.
/// Empty matrices mean "no constraints of that kind"; empty bound vectors
/// mean free variables.
struct LpProblem {
  Vec c;
  Mat A_ub;
  Vec b_ub;
  Mat A_eq;
  Vec b_eq;
  Vec lower;
  Vec upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus status);

/// Dual multipliers follow the Lagrangian c.x + dual_ub.(A_ub x - b_ub)
/// + dual_eq.(A_eq x - b_eq) + dual_upper.(x - upper) + dual_lower.(lower - x),
/// so stationarity reads c + A_ub^T dual_ub + A_eq^T dual_eq + dual_upper
/// - dual_lower = 0 with every inequality multiplier nonnegative.
struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double value = 0.0;
  Vec dual_ub;
  Vec dual_eq;
  Vec dual_lower;
  Vec dual_upper;
  int iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
  /// Primal objective minus dual objective; zero at a primal-dual optimum.
  double duality_gap(const LpProblem& p) const;
};

/// Dense two-phase simplex with Bland's rule. Statuses distinguish infeasible
/// and unbounded problems rather than throwing.
LpResult lp_solve(const LpProblem& p, const Tolerances& tol = {});

// ---------------------------------------------------------------------------
// Quadratic programming

/// min 1/2 x^T H x + g.x  s.t.  A x <= b,  Aeq x = beq  with H positive definite.
struct QpProblem {
  Mat H;
  Vec g;
  Mat A;
  Vec b;
  Mat Aeq;
  Vec beq;
};

struct QpResult {
  Vec x;
  Vec multipliers;      // one per inequality row, zero when inactive
  Vec eq_multipliers;
  int iterations = 0;
};

/// Primal active-set method started from an LP-feasible point. Throws
/// Error(Infeasible) for an empty feasible set and Error(NonConvergence) once
/// the iteration cap of 10 x (number of constraints) is exhausted.
QpResult qp_solve(const QpProblem& p, const Tolerances& tol = {});

/// Euclidean projection of x onto {y : A y <= b, Aeq y = beq}.
Vec project_polyhedron(const Vec& x, const Mat& A, const Vec& b, const Mat& Aeq = Mat(),
                       const Vec& beq = Vec(), const Tolerances& tol = {});

}  // namespace tvx
