// Test-only reference implementations, kept independent of the library
// code paths they are used to check.
//
//  - jacobi_svd: one-sided Jacobi SVD (no Eigen decompositions involved)
//  - rank_count: numerical rank via jacobi_svd
//  - simplex LP: dense two-phase simplex with Bland's rule
//  - min_l1_equality: l1 minimization as an LP over the split c = c+ - c-

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace semc::oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct JacobiSvd {
  Matrix u;
  Vector sigma;
  Matrix v;
};

// One-sided Jacobi on the columns of a (requires rows >= cols internally;
// wide inputs are handled by transposing). Accuracy is ample for the small
// matrices used in tests.
inline JacobiSvd jacobi_svd(const Matrix& a_in) {
  const bool wide = a_in.rows() < a_in.cols();
  Matrix g = wide ? a_in.transpose() : a_in;
  const Index m = g.rows(), n = g.cols();
  Matrix v = Matrix::Identity(n, n);

  const double tol = 1e-15;
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double app = g.col(p).squaredNorm();
        const double aqq = g.col(q).squaredNorm();
        const double apq = g.col(p).dot(g.col(q));
        if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < m; ++i) {
          const double gp = g(i, p), gq = g(i, q);
          g(i, p) = c * gp - s * gq;
          g(i, q) = s * gp + c * gq;
        }
        for (Index i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector sigma(n);
  Matrix u = Matrix::Zero(m, n);
  for (Index k = 0; k < n; ++k) {
    sigma(k) = g.col(k).norm();
    if (sigma(k) > 0.0) u.col(k) = g.col(k) / sigma(k);
  }
  // Sort nonincreasing.
  std::vector<Index> order(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) order[static_cast<size_t>(k)] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return sigma(a) > sigma(b); });
  Matrix us(m, n), vs(n, n);
  Vector ss(n);
  for (Index k = 0; k < n; ++k) {
    us.col(k) = u.col(order[static_cast<size_t>(k)]);
    vs.col(k) = v.col(order[static_cast<size_t>(k)]);
    ss(k) = sigma(order[static_cast<size_t>(k)]);
  }
  if (wide) return JacobiSvd{vs, ss, us};
  return JacobiSvd{us, ss, vs};
}

inline Index rank_count(const Matrix& a, double rel_tol) {
  JacobiSvd f = jacobi_svd(a);
  if (f.sigma.size() == 0) return 0;
  const double smax = f.sigma(0);
  Index q = 0;
  for (Index i = 0; i < f.sigma.size(); ++i) {
    if (f.sigma(i) > rel_tol * smax) ++q;
  }
  return q;
}

inline Matrix best_rank_k(const Matrix& a, Index k) {
  JacobiSvd f = jacobi_svd(a);
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Index i = 0; i < k && i < f.sigma.size(); ++i) {
    out += f.sigma(i) * f.u.col(i) * f.v.col(i).transpose();
  }
  return out;
}

inline double loop_inner_product(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) acc += a(i, j) * b(i, j);
  }
  return acc;
}

inline double loop_frobenius(const Matrix& a) {
  return std::sqrt(loop_inner_product(a, a));
}

struct LpSolution {
  Vector x;
  double objective = 0.0;
  bool feasible = false;
};

// min c^T x  s.t.  A x = b, x >= 0.  Dense two-phase simplex, Bland's rule.
inline LpSolution simplex_solve(Matrix a, Vector b, const Vector& c) {
  const double eps = 1e-11;
  const Index m = a.rows();
  const Index n = a.cols();
  for (Index i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      a.row(i) = -a.row(i);
      b(i) = -b(i);
    }
  }

  // Tableau with artificial variables appended: columns [x | artificials | rhs].
  const Index total = n + m;
  Matrix t = Matrix::Zero(m + 1, total + 1);
  t.block(0, 0, m, n) = a;
  t.block(0, n, m, m) = Matrix::Identity(m, m);
  t.col(total).head(m) = b;
  std::vector<Index> basis(static_cast<size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<size_t>(i)] = n + i;

  auto pivot = [&](Index row, Index col) {
    t.row(row) /= t(row, col);
    for (Index i = 0; i <= m; ++i) {
      if (i != row && std::abs(t(i, col)) > 0.0) t.row(i) -= t(i, col) * t.row(row);
    }
    basis[static_cast<size_t>(row)] = col;
  };

  auto run_simplex = [&](Index ncols) {
    const double pivot_tol = 1e-9;
    for (int iter = 0; iter < 50000; ++iter) {
      // Bland's rule over the pivotable columns; columns whose reduced cost
      // is only marginally negative but admit no pivot row are rounded to
      // optimal rather than declared unbounded.
      Index enter = -1, leave = -1;
      double most_negative = 0.0;
      for (Index j = 0; j < ncols && enter < 0; ++j) {
        if (t(m, j) >= -eps) continue;
        most_negative = std::min(most_negative, t(m, j));
        Index cand = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < m; ++i) {
          if (t(i, j) > pivot_tol) {
            const double ratio = t(i, total) / t(i, j);
            if (ratio < best - eps ||
                (ratio < best + eps &&
                 (cand < 0 || basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(cand)]))) {
              best = ratio;
              cand = i;
            }
          }
        }
        if (cand >= 0) {
          enter = j;
          leave = cand;
        }
      }
      if (enter < 0) return most_negative >= -1e-6;  // optimal, or truly unbounded
      pivot(leave, enter);
    }
    return false;
  };

  // Phase 1: minimize sum of artificials.
  for (Index j = 0; j < total; ++j) {
    double s = 0.0;
    for (Index i = 0; i < m; ++i) {
      if (basis[static_cast<size_t>(i)] >= n) s += t(i, j);
    }
    t(m, j) = (j >= n ? 1.0 : 0.0) - s;
  }
  {
    double s = 0.0;
    for (Index i = 0; i < m; ++i) s += t(i, total);
    t(m, total) = -s;
  }
  if (!run_simplex(total)) return {};
  if (-t(m, total) > 1e-8) return {};  // infeasible

  // Drive remaining artificials out of the basis where possible.
  for (Index i = 0; i < m; ++i) {
    if (basis[static_cast<size_t>(i)] >= n) {
      Index enter = -1;
      for (Index j = 0; j < n; ++j) {
        if (std::abs(t(i, j)) > eps) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) pivot(i, enter);
    }
  }

  // Phase 2 objective over original columns.
  t.row(m).setZero();
  for (Index j = 0; j < n; ++j) t(m, j) = c(j);
  for (Index i = 0; i < m; ++i) {
    const Index bj = basis[static_cast<size_t>(i)];
    if (bj < n && std::abs(c(bj)) > 0.0) t.row(m) -= c(bj) * t.row(i);
  }
  // Forbid re-entering artificial columns.
  for (Index j = n; j < total; ++j) t(m, j) = 1e30;
  if (!run_simplex(n)) return {};

  LpSolution sol;
  sol.x = Vector::Zero(n);
  for (Index i = 0; i < m; ++i) {
    const Index bj = basis[static_cast<size_t>(i)];
    if (bj < n) sol.x(bj) = t(i, total);
  }
  sol.objective = c.dot(sol.x);
  sol.feasible = true;
  return sol;
}

// min ||x||_1 s.t. A x = b, via the split x = xp - xn with xp, xn >= 0.
inline LpSolution min_l1_equality(const Matrix& a, const Vector& b) {
  const Index n = a.cols();
  Matrix as(a.rows(), 2 * n);
  as << a, -a;
  Vector cost = Vector::Ones(2 * n);
  LpSolution split = simplex_solve(as, b, cost);
  if (!split.feasible) return split;
  LpSolution sol;
  sol.x = split.x.head(n) - split.x.tail(n);
  sol.objective = split.objective;
  sol.feasible = true;
  return sol;
}

}  // namespace semc::oracle
