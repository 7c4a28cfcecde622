// The convex expression subproblem: per column j of a dictionary D,
//   min ||c||_1  s.t.  ||D_{-j} c - d_j||_2 <= eps_rel ||d_j||_2,  c_j = 0,
// the equality constraint relaxed to a ball so noisy dictionaries stay
// feasible. Solved by operator splitting: a cached least-squares step on the
// constraint block, soft-threshold shrinkage on the l1 block, ball projection
// on the residual block, and scaled dual updates. A least-squares refit on
// the detected support then restores feasibility to solver precision.
//
// Assembling all columns gives the expression matrix C (zero diagonal held
// structurally). The same machinery initializes C from a side-information
// basis via the transposed dictionary.

#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "semc/dense.hpp"

namespace semc {

struct ExpressionSettings {
  double eps_rel = 1e-8;   // feasibility slack, relative to ||d_j||
  int max_iters = 4000;
  double rho = 1.0;        // splitting penalty
  double relaxation = 1.8; // over-relaxation, in [1, 2)
  double tol_abs = 1e-11;  // on the ||d_j|| = 1 normalized problem
  double tol_rel = 1e-9;
  // Regularization weight of the unsplit formulation. The split algorithm
  // has no use for it; it is accepted and carried for config compatibility.
  double lambda = 0.0;

  void validate() const {
    if (eps_rel < 0.0) throw std::invalid_argument("ExpressionSettings: eps_rel must be >= 0");
    if (max_iters < 1) throw std::invalid_argument("ExpressionSettings: max_iters must be >= 1");
    if (!(rho > 0.0)) throw std::invalid_argument("ExpressionSettings: rho must be > 0");
    if (!(relaxation >= 1.0 && relaxation < 2.0)) {
      throw std::invalid_argument("ExpressionSettings: relaxation in [1, 2)");
    }
    if (tol_abs < 0.0 || tol_rel < 0.0) {
      throw std::invalid_argument("ExpressionSettings: tolerances must be >= 0");
    }
  }
};

struct ColumnSolution {
  Vector coeffs;          // full length n, coeffs[j] == 0
  double residual = 0.0;  // ||D c - d_j||_2
  double l1 = 0.0;
  bool infeasible = false;  // even least squares misses the slack
  int iters = 0;
};

namespace detail {

inline Vector soft_threshold(const Vector& v, double kappa) {
  return v.unaryExpr([kappa](double x) {
    if (x > kappa) return x - kappa;
    if (x < -kappa) return x + kappa;
    return 0.0;
  });
}

// min ||c||_1 s.t. ||A c - b|| <= eps, on a pre-normalized problem.
struct BallBasisPursuit {
  Vector solution;
  double residual = 0.0;
  int iters = 0;
};

inline BallBasisPursuit ball_basis_pursuit(const Matrix& a, const Vector& b, double eps,
                                           const Vector& warm, const ExpressionSettings& s) {
  const Index n = a.cols();
  const Index p = a.rows();
  // The penalty cancels from the least-squares step, so residual-balancing
  // updates of rho below need no refactorization.
  Matrix g = Matrix::Identity(n, n) + a.transpose() * a;
  Eigen::LLT<Matrix> llt(g);

  Vector x = warm, z = warm, u = Vector::Zero(n);
  Vector w = b, v = Vector::Zero(p);
  double rho = s.rho;
  const double alpha = s.relaxation;

  BallBasisPursuit out;
  for (int k = 0; k < s.max_iters; ++k) {
    x = llt.solve((z - u) + a.transpose() * (w - v));
    Vector ax = a * x;
    Vector x_rel = alpha * x + (1.0 - alpha) * z;
    Vector ax_rel = alpha * ax + (1.0 - alpha) * w;

    Vector z_new = soft_threshold(x_rel + u, 1.0 / rho);
    Vector t = ax_rel + v - b;
    const double tn = t.norm();
    Vector w_new = tn > eps ? Vector(b + (eps / tn) * t) : Vector(b + t);

    const double r_pri = std::sqrt((x - z_new).squaredNorm() + (ax - w_new).squaredNorm());
    const double s_dual =
        rho * std::sqrt((z_new - z).squaredNorm() + (w_new - w).squaredNorm());
    u += x_rel - z_new;
    v += ax_rel - w_new;
    z = std::move(z_new);
    w = std::move(w_new);
    out.iters = k + 1;

    if (r_pri > 10.0 * s_dual && rho < 1e8) {
      rho *= 2.0;
      u /= 2.0;
      v /= 2.0;
    } else if (s_dual > 10.0 * r_pri && rho > 1e-8) {
      rho /= 2.0;
      u *= 2.0;
      v *= 2.0;
    }

    const double scale_pri =
        std::max({std::sqrt(x.squaredNorm() + ax.squaredNorm()),
                  std::sqrt(z.squaredNorm() + w.squaredNorm()), b.norm()});
    const double eps_pri = std::sqrt(static_cast<double>(n + p)) * s.tol_abs +
                           s.tol_rel * scale_pri;
    const double eps_dual = std::sqrt(static_cast<double>(n)) * s.tol_abs +
                            s.tol_rel * rho *
                                std::sqrt(u.squaredNorm() + (a.transpose() * v).squaredNorm());
    if (r_pri <= eps_pri && s_dual <= eps_dual) break;
  }
  out.solution = z;
  out.residual = (a * z - b).norm();
  return out;
}

// Least-squares refit on the detected support, growing it in order of
// coefficient magnitude until the refit meets the slack. Returns false when
// no grown support reaches it.
inline bool refit_on_support(const Matrix& a, const Vector& b, double limit, const Vector& c,
                             Vector& out, double& out_residual) {
  const Index n = c.size();
  std::vector<Index> order(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index l, Index r) { return std::abs(c(l)) > std::abs(c(r)); });
  const double thresh = std::max(1e-10, 1e-8 * c.cwiseAbs().maxCoeff());
  Index active = 0;
  while (active < n && std::abs(c(order[static_cast<size_t>(active)])) > thresh) ++active;
  if (active == 0) active = std::min(n, a.rows());

  for (Index k = active; k <= n; k = std::min(n, std::max(k + 1, k + k / 2))) {
    Matrix as(a.rows(), k);
    for (Index i = 0; i < k; ++i) as.col(i) = a.col(order[static_cast<size_t>(i)]);
    Vector cs = as.completeOrthogonalDecomposition().solve(b);
    const double res = (as * cs - b).norm();
    if (res <= limit) {
      out = Vector::Zero(n);
      for (Index i = 0; i < k; ++i) out(order[static_cast<size_t>(i)]) = cs(i);
      out_residual = res;
      return true;
    }
    if (k == n) break;
  }
  return false;
}

}  // namespace detail

/// Minimum-l1 self-expression of column j in terms of the other columns of d.
/// Zero columns map to zero coefficients. When even the least-squares
/// residual misses the slack the column is flagged infeasible and the slack
/// is relaxed to the least-squares level, giving the least-l1 solution among
/// the relaxed-feasible set.
inline ColumnSolution solve_column(const Matrix& d, Index j, const ExpressionSettings& s) {
  s.validate();
  require_finite(d, "solve_column");
  const Index n = d.cols();
  if (j < 0 || j >= n) throw DimensionError("solve_column: column index out of range");

  ColumnSolution out;
  out.coeffs = Vector::Zero(n);
  const Vector b = d.col(j);
  const double bn = b.norm();
  if (bn == 0.0) return out;

  // Dictionary without column j, normalized so ||b|| = 1.
  Matrix a(d.rows(), n - 1);
  a << d.leftCols(j), d.rightCols(n - 1 - j);
  a /= bn;
  const Vector bs = b / bn;

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  const Vector c_ls = cod.solve(bs);
  const double ls_res = (a * c_ls - bs).norm();
  double eps = s.eps_rel;
  if (ls_res > eps + 1e-12) {
    out.infeasible = true;
    eps = ls_res * (1.0 + 1e-9) + 1e-14;
  }
  const double limit = eps * (1.0 + 1e-9) + 1e-13;

  detail::BallBasisPursuit admm = detail::ball_basis_pursuit(a, bs, eps, c_ls, s);
  out.iters = admm.iters;

  // Feasible candidates, best l1 wins: the support refit (sparse), the
  // splitting iterate itself, and the iterate with its minimum-norm
  // feasibility correction (which always meets the least-squares residual).
  Vector c;
  double residual = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vector& cand, double res) {
    if (res > limit) return;
    if (residual > limit || cand.lpNorm<1>() < c.lpNorm<1>()) {
      c = cand;
      residual = res;
    }
  };
  {
    Vector refit;
    double refit_res = 0.0;
    if (detail::refit_on_support(a, bs, limit, admm.solution, refit, refit_res)) {
      consider(refit, refit_res);
    }
  }
  consider(admm.solution, admm.residual);
  {
    Vector corrected = admm.solution - cod.solve(a * admm.solution - bs);
    consider(corrected, (a * corrected - bs).norm());
  }
  if (!(residual <= limit)) {  // cannot happen for ls-feasible columns
    c = c_ls;
    residual = ls_res;
  }

  for (Index i = 0; i < n - 1; ++i) {
    out.coeffs(i < j ? i : i + 1) = c(i);
  }
  out.residual = residual * bn;
  out.l1 = c.lpNorm<1>();
  return out;
}

/// Expression matrix with structurally zero diagonal plus per-column
/// diagnostics; the objective is the vectorized l1 norm of C.
struct ExpressionMatrix {
  Matrix c;
  Vector residuals;   // ||D c_j - d_j|| per column
  Vector column_l1;
  std::vector<std::uint8_t> infeasible;
  double objective = 0.0;  // ||C||_1, vectorized

  Index infeasible_count() const {
    Index k = 0;
    for (auto f : infeasible) k += f ? 1 : 0;
    return k;
  }
  double max_relative_residual(const Matrix& d) const {
    double worst = 0.0;
    for (Index j = 0; j < d.cols(); ++j) {
      const double dn = d.col(j).norm();
      if (dn > 0.0) worst = std::max(worst, residuals(j) / dn);
    }
    return worst;
  }

  void write_column_csv(std::ostream& os) const {
    os << "column,l1,residual,infeasible\n";
    os.precision(17);
    for (Index j = 0; j < c.cols(); ++j) {
      os << j << ',' << column_l1(j) << ',' << residuals(j) << ','
         << int(infeasible[static_cast<size_t>(j)]) << '\n';
    }
  }
};

/// Solves every column against the dictionary d. Columns are independent
/// subproblems; the assembly is order-invariant.
inline ExpressionMatrix expression_from_dictionary(const Matrix& d,
                                                   const ExpressionSettings& s) {
  const Index n = d.cols();
  ExpressionMatrix out;
  out.c = Matrix::Zero(n, n);
  out.residuals = Vector::Zero(n);
  out.column_l1 = Vector::Zero(n);
  out.infeasible.assign(static_cast<size_t>(n), 0);
  for (Index j = 0; j < n; ++j) {
    ColumnSolution col = solve_column(d, j, s);
    out.c.col(j) = col.coeffs;
    out.residuals(j) = col.residual;
    out.column_l1(j) = col.l1;
    out.infeasible[static_cast<size_t>(j)] = col.infeasible ? 1 : 0;
  }
  out.objective = out.column_l1.sum();
  return out;
}

/// Expression of the current completion: dictionary is X itself.
inline ExpressionMatrix update_expression(const Matrix& x, const ExpressionSettings& s) {
  return expression_from_dictionary(x, s);
}

/// Initial expression from the side-information basis: the sparsest C with
/// B'^T (C - I) = 0 and zero diagonal, i.e. the dictionary is B'^T. With
/// fewer basis columns than points the constraints are underdetermined and
/// generically feasible.
inline ExpressionMatrix init_expression(const Matrix& b_prime, const ExpressionSettings& s) {
  if (b_prime.rows() <= b_prime.cols()) {
    throw DimensionError("init_expression: basis must be tall (n x r with r < n)");
  }
  return expression_from_dictionary(b_prime.transpose(), s);
}

}  // namespace semc
