#include "tvx/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tvx {

double norm(const Vec& v, const NormKind& kind) {
  if (kind.kind == NormKind::Kind::Euclidean) return v.norm();
  if (kind.split < 0 || kind.split >= v.size())
    throw Error(ErrorKind::DimensionMismatch, "max-product split index outside vector");
  const double head = v.head(kind.split).norm();
  const double tail = v.tail(v.size() - kind.split).norm();
  return std::max(head, tail);
}

double dist(const Vec& a, const Vec& b, const NormKind& kind) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "dist: operand sizes differ");
  return norm(a - b, kind);
}

void require_dim(const Vec& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim)
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": expected dimension " +
                                                  std::to_string(dim) + ", got " +
                                                  std::to_string(v.size()));
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorKind::Precondition, std::string(what) + ": non-finite coordinate");
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

double LpResult::duality_gap(const LpProblem& p) const {
  double dual = 0.0;
  if (dual_ub.size()) dual -= p.b_ub.dot(dual_ub);
  if (dual_eq.size()) dual -= p.b_eq.dot(dual_eq);
  for (Eigen::Index j = 0; j < dual_lower.size(); ++j)
    if (dual_lower[j] != 0.0) dual += dual_lower[j] * p.lower[j];
  for (Eigen::Index j = 0; j < dual_upper.size(); ++j)
    if (dual_upper[j] != 0.0) dual -= dual_upper[j] * p.upper[j];
  return value - dual;
}

namespace {

enum class RowKind { User, Equality, Lower, Upper };

struct RowOrigin {
  RowKind kind;
  Eigen::Index index;
};

// Dense tableau simplex on [u, v, slack, artificial] with x = u - v.
class Simplex {
 public:
  Simplex(const LpProblem& p, const Tolerances& tol) : p_(p), tol_(tol) {
    n_ = p.c.size();
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    const auto add = [&](const Vec& a, double b, RowOrigin origin) {
      rows.push_back(a);
      rhs.push_back(b);
      origins_.push_back(origin);
    };
    for (Eigen::Index i = 0; i < p.A_ub.rows(); ++i) add(p.A_ub.row(i).transpose(), p.b_ub[i], {RowKind::User, i});
    for (Eigen::Index j = 0; j < p.lower.size(); ++j) {
      if (!std::isfinite(p.lower[j])) continue;
      Vec a = Vec::Zero(n_);
      a[j] = -1.0;
      add(a, -p.lower[j], {RowKind::Lower, j});
    }
    for (Eigen::Index j = 0; j < p.upper.size(); ++j) {
      if (!std::isfinite(p.upper[j])) continue;
      Vec a = Vec::Zero(n_);
      a[j] = 1.0;
      add(a, p.upper[j], {RowKind::Upper, j});
    }
    m_ineq_ = static_cast<Eigen::Index>(rows.size());
    for (Eigen::Index i = 0; i < p.A_eq.rows(); ++i) add(p.A_eq.row(i).transpose(), p.b_eq[i], {RowKind::Equality, i});
    m_ = static_cast<Eigen::Index>(rows.size());

    cols_ = 2 * n_ + m_ineq_ + m_;
    art0_ = 2 * n_ + m_ineq_;
    T_ = Mat::Zero(m_ + 1, cols_ + 1);
    sign_.resize(m_);
    basis_.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double s = rhs[i] < 0 ? -1.0 : 1.0;
      sign_[i] = s;
      T_.block(i, 0, 1, n_) = s * rows[i].transpose();
      T_.block(i, n_, 1, n_) = -s * rows[i].transpose();
      if (i < m_ineq_) T_(i, 2 * n_ + i) = s;
      T_(i, art0_ + i) = 1.0;
      T_(i, cols_) = s * rhs[i];
      basis_[i] = art0_ + i;
    }
  }

  LpResult solve() {
    LpResult res;
    const double scale = 1.0 + T_.col(cols_).head(m_).cwiseAbs().maxCoeff();

    // Phase 1: minimize the sum of artificials.
    Vec cost = Vec::Zero(cols_);
    cost.tail(m_).setOnes();
    load_costs(cost);
    LpStatus st = iterate(/*allow_artificial=*/true, res.iterations);
    if (st == LpStatus::IterationLimit) {
      res.status = st;
      return res;
    }
    if (-T_(m_, cols_) > tol_.feasibility * scale) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    drive_out_artificials();

    // Phase 2.
    cost.setZero();
    cost.head(n_) = p_.c;
    cost.segment(n_, n_) = -p_.c;
    load_costs(cost);
    st = iterate(/*allow_artificial=*/false, res.iterations);
    res.status = st;
    if (st != LpStatus::Optimal) return res;

    Vec z = Vec::Zero(cols_);
    for (Eigen::Index i = 0; i < m_; ++i) z[basis_[i]] = T_(i, cols_);
    res.x = z.head(n_) - z.segment(n_, n_);
    res.value = p_.c.dot(res.x);

    res.dual_ub = Vec::Zero(p_.A_ub.rows());
    res.dual_eq = Vec::Zero(p_.A_eq.rows());
    res.dual_lower = Vec::Zero(n_);
    res.dual_upper = Vec::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      // Reduced cost of artificial i equals -y_i; multiplier is -sign_i * y_i.
      const double y = -T_(m_, art0_ + i);
      double mult = -sign_[i] * y;
      const RowOrigin o = origins_[i];
      if (o.kind != RowKind::Equality) mult = std::max(0.0, mult);
      switch (o.kind) {
        case RowKind::User: res.dual_ub[o.index] = mult; break;
        case RowKind::Equality: res.dual_eq[o.index] = mult; break;
        case RowKind::Lower: res.dual_lower[o.index] = mult; break;
        case RowKind::Upper: res.dual_upper[o.index] = mult; break;
      }
    }
    return res;
  }

 private:
  void load_costs(const Vec& cost) {
    T_.row(m_).setZero();
    T_.row(m_).head(cols_) = cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) T_.row(m_) -= cb * T_.row(i);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    T_.row(r) /= T_(r, c);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = T_(i, c);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    basis_[r] = c;
  }

  LpStatus iterate(bool allow_artificial, int& iterations) {
    const int cap = 50 * static_cast<int>(m_ + cols_ + 1);
    const Eigen::Index limit = allow_artificial ? cols_ : art0_;
    for (int it = 0; it < cap; ++it) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (T_(m_, j) < -kPivotEps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      Eigen::Index leave = -1;
      double best = kInf;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = T_(i, enter);
        if (a <= kPivotEps) continue;
        const double ratio = T_(i, cols_) / a;
        if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && leave >= 0 && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
      ++iterations;
    }
    return LpStatus::IterationLimit;
  }

  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < art0_) continue;
      Eigen::Index best = -1;
      double mag = kPivotEps;
      for (Eigen::Index j = 0; j < art0_; ++j) {
        if (std::abs(T_(i, j)) > mag) {
          mag = std::abs(T_(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  static constexpr double kPivotEps = 1e-11;

  const LpProblem& p_;
  Tolerances tol_;
  Eigen::Index n_ = 0, m_ = 0, m_ineq_ = 0, cols_ = 0, art0_ = 0;
  Mat T_;
  std::vector<double> sign_;
  std::vector<Eigen::Index> basis_;
  std::vector<RowOrigin> origins_;
};

void validate_lp(const LpProblem& p) {
  const Eigen::Index n = p.c.size();
  if (n == 0) throw Error(ErrorKind::DimensionMismatch, "lp_solve: empty objective");
  if ((p.A_ub.rows() && p.A_ub.cols() != n) || p.A_ub.rows() != p.b_ub.size())
    throw Error(ErrorKind::DimensionMismatch, "lp_solve: inequality block shape");
  if ((p.A_eq.rows() && p.A_eq.cols() != n) || p.A_eq.rows() != p.b_eq.size())
    throw Error(ErrorKind::DimensionMismatch, "lp_solve: equality block shape");
  if ((p.lower.size() && p.lower.size() != n) || (p.upper.size() && p.upper.size() != n))
    throw Error(ErrorKind::DimensionMismatch, "lp_solve: bound vector size");
  if (!p.c.allFinite() || !p.b_ub.allFinite() || !p.b_eq.allFinite() || !p.A_ub.allFinite() ||
      !p.A_eq.allFinite())
    throw Error(ErrorKind::Precondition, "lp_solve: non-finite data");
}

// Greedy selection of linearly independent rows against an orthonormal basis.
class RowBasis {
 public:
  explicit RowBasis(Eigen::Index n) : n_(n) {}

  bool try_add(const Vec& row) {
    Vec r = row;
    for (const Vec& q : basis_) r -= q.dot(r) * q;
    for (const Vec& q : basis_) r -= q.dot(r) * q;
    const double nr = r.norm();
    if (nr <= 1e-10 * std::max(1.0, row.norm())) return false;
    basis_.push_back(r / nr);
    return true;
  }

  void clear() { basis_.clear(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(basis_.size()); }

 private:
  Eigen::Index n_;
  std::vector<Vec> basis_;
};

}  // namespace

LpResult lp_solve(const LpProblem& p, const Tolerances& tol) {
  validate_lp(p);
  Simplex s(p, tol);
  return s.solve();
}

QpResult qp_solve(const QpProblem& p, const Tolerances& tol) {
  const Eigen::Index n = p.g.size();
  if (p.H.rows() != n || p.H.cols() != n) throw Error(ErrorKind::DimensionMismatch, "qp_solve: Hessian shape");
  if ((p.A.rows() && p.A.cols() != n) || p.A.rows() != p.b.size())
    throw Error(ErrorKind::DimensionMismatch, "qp_solve: inequality block shape");
  if ((p.Aeq.rows() && p.Aeq.cols() != n) || p.Aeq.rows() != p.beq.size())
    throw Error(ErrorKind::DimensionMismatch, "qp_solve: equality block shape");

  const Eigen::Index m = p.A.rows();

  // Independent equality rows; consistency is settled by the LP phase below.
  RowBasis eq_basis(n);
  std::vector<Eigen::Index> eq_rows;
  for (Eigen::Index i = 0; i < p.Aeq.rows(); ++i)
    if (eq_basis.try_add(p.Aeq.row(i).transpose())) eq_rows.push_back(i);

  LpProblem feas;
  feas.c = Vec::Zero(n);
  feas.A_ub = p.A;
  feas.b_ub = p.b;
  feas.A_eq = p.Aeq;
  feas.b_eq = p.beq;
  if (m == 0 && p.Aeq.rows() == 0) {
    feas.A_ub = Mat(0, n);
    feas.b_ub = Vec(0);
  }
  if (feas.A_eq.rows() == 0) feas.A_eq = Mat(0, n);
  if (feas.A_ub.rows() == 0) feas.A_ub = Mat(0, n);
  const LpResult start = lp_solve(feas, tol);
  if (start.status == LpStatus::Infeasible) throw Error(ErrorKind::Infeasible, "qp_solve: empty feasible set");
  if (!start.optimal()) throw Error(ErrorKind::NonConvergence, "qp_solve: feasibility phase failed");

  Vec x = start.x;
  std::vector<Eigen::Index> working;
  std::vector<char> in_w(static_cast<size_t>(m), 0);

  const auto rebuild_basis = [&](RowBasis& basis) {
    basis.clear();
    for (Eigen::Index i : eq_rows) basis.try_add(p.Aeq.row(i).transpose());
    for (Eigen::Index i : working) basis.try_add(p.A.row(i).transpose());
  };

  {
    RowBasis basis(n);
    rebuild_basis(basis);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double slack = p.b[i] - p.A.row(i).dot(x);
      if (slack <= tol.feasibility * (1.0 + std::abs(p.b[i])) && basis.try_add(p.A.row(i).transpose())) {
        working.push_back(i);
        in_w[static_cast<size_t>(i)] = 1;
      }
    }
  }

  const Eigen::Index meq = static_cast<Eigen::Index>(eq_rows.size());
  const int cap = static_cast<int>(std::max<Eigen::Index>(10 * (m + p.Aeq.rows()), 10));
  QpResult out;
  for (int it = 0; it < cap; ++it) {
    const Eigen::Index k = meq + static_cast<Eigen::Index>(working.size());
    Mat C(k, n);
    for (Eigen::Index r = 0; r < meq; ++r) C.row(r) = p.Aeq.row(eq_rows[static_cast<size_t>(r)]);
    for (size_t r = 0; r < working.size(); ++r) C.row(meq + static_cast<Eigen::Index>(r)) = p.A.row(working[r]);

    Mat K = Mat::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = p.H;
    K.topRightCorner(n, k) = C.transpose();
    K.bottomLeftCorner(k, n) = C;
    Vec rhs = Vec::Zero(n + k);
    rhs.head(n) = -(p.H * x + p.g);
    const Vec sol = K.fullPivLu().solve(rhs);
    const Vec step = sol.head(n);
    const Vec lambda = sol.tail(k);
    ++out.iterations;

    if (step.norm() <= 1e-12 * (1.0 + x.norm())) {
      Eigen::Index worst = -1;
      double most_negative = -1e-12 * (1.0 + rhs.head(n).norm());
      for (size_t r = 0; r < working.size(); ++r) {
        const double l = lambda[meq + static_cast<Eigen::Index>(r)];
        if (l < most_negative) {
          most_negative = l;
          worst = static_cast<Eigen::Index>(r);
        }
      }
      if (worst < 0) {
        out.x = x;
        out.multipliers = Vec::Zero(m);
        out.eq_multipliers = Vec::Zero(p.Aeq.rows());
        for (size_t r = 0; r < working.size(); ++r)
          out.multipliers[working[r]] = std::max(0.0, lambda[meq + static_cast<Eigen::Index>(r)]);
        for (Eigen::Index r = 0; r < meq; ++r) out.eq_multipliers[eq_rows[static_cast<size_t>(r)]] = lambda[r];
        return out;
      }
      in_w[static_cast<size_t>(working[static_cast<size_t>(worst)])] = 0;
      working.erase(working.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    Eigen::Index block = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_w[static_cast<size_t>(i)]) continue;
      const double ap = p.A.row(i).dot(step);
      if (ap <= 1e-14 * p.A.row(i).norm() * step.norm()) continue;
      const double slack = std::max(0.0, p.b[i] - p.A.row(i).dot(x));
      const double a = slack / ap;
      if (a < alpha) {
        alpha = a;
        block = i;
      }
    }
    x += alpha * step;
    if (block >= 0) {
      working.push_back(block);
      in_w[static_cast<size_t>(block)] = 1;
    }
  }
  throw Error(ErrorKind::NonConvergence, "qp_solve: active-set iteration cap reached");
}

Vec project_polyhedron(const Vec& x, const Mat& A, const Vec& b, const Mat& Aeq, const Vec& beq,
                       const Tolerances& tol) {
  const Eigen::Index n = x.size();
  require_finite(x, "project_polyhedron");
  const Mat Ain = A.rows() ? A : Mat(0, n);
  const Mat Eq = Aeq.rows() ? Aeq : Mat(0, n);
  if (Ain.cols() != n || Eq.cols() != n) throw Error(ErrorKind::DimensionMismatch, "project_polyhedron: matrix width");

  bool inside = true;
  for (Eigen::Index i = 0; i < Ain.rows() && inside; ++i) inside = Ain.row(i).dot(x) <= b[i];
  for (Eigen::Index i = 0; i < Eq.rows() && inside; ++i) inside = Eq.row(i).dot(x) == beq[i];
  if (inside) return x;

  QpProblem qp;
  qp.H = Mat::Identity(n, n);
  qp.g = -x;
  qp.A = Ain;
  qp.b = b.size() ? b : Vec(0);
  qp.Aeq = Eq;
  qp.beq = beq.size() ? beq : Vec(0);
  return qp_solve(qp, tol).x;
}

}  // namespace tvx
