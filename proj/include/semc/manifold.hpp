// Geometry of the constrained fixed-rank sets used by the solver.
//
// A point is a compact SVD triple of rank exactly r. The constraint set is
// defined by an expression matrix C with zero diagonal: rank-r matrices X
// additionally satisfying XC = X. Its tangent-space projector composes the
// classical fixed-rank projector with right-multiplication by P_W, where W
// spans the null space of (C - I)^T; the metric projection retraction is
// rank-r SVD truncation. A baseline construction bypasses the C machinery
// entirely and yields the plain fixed-rank geometry.

#pragma once

#include <optional>
#include <utility>

#include "semc/dense.hpp"

namespace semc {

class BasePointError : public std::domain_error {
public:
  explicit BasePointError(const std::string& what) : std::domain_error(what) {}
};

/// Rank-r point held as a compact SVD triple with strictly positive
/// singular values.
struct FixedRankPoint {
  SvdFactors f;

  Index rank() const { return f.k(); }
  Index rows() const { return f.rows(); }
  Index cols() const { return f.cols(); }
  double top_singular_value() const { return f.sigma(0); }
};

inline Matrix embed(const FixedRankPoint& x) { return x.f.reconstruct(); }

inline FixedRankPoint make_point(SvdFactors f) {
  const Index k = f.k();
  if (k < 1) throw InfeasibleRankError("make_point: empty factorization");
  for (Index i = 0; i < k; ++i) {
    if (!(f.sigma(i) > 0.0)) throw InfeasibleRankError("make_point: nonpositive singular value");
    if (i > 0 && f.sigma(i) > f.sigma(i - 1)) {
      throw NumericalError("make_point: singular values not sorted");
    }
  }
  const double utol = 1e-10;
  if ((f.u.transpose() * f.u - Matrix::Identity(k, k)).norm() > utol ||
      (f.v.transpose() * f.v - Matrix::Identity(k, k)).norm() > utol) {
    throw NumericalError("make_point: factors not orthonormal");
  }
  return FixedRankPoint{std::move(f)};
}

/// Validated expression matrix C plus the orthonormal null-space basis W of
/// (C - I)^T and its rank q. Immutable after construction.
class SelfExpressiveManifold {
public:
  static SelfExpressiveManifold baseline(Index m, Index n, Index r) {
    if (m < 1 || n < 1 || r < 1 || r > std::min(m, n)) {
      throw DimensionError("baseline manifold: bad dimensions");
    }
    SelfExpressiveManifold mfd;
    mfd.m_ = m;
    mfd.n_ = n;
    mfd.r_ = r;
    mfd.q_ = 0;
    mfd.rank_tol_ = default_rank_tol(m, n);
    mfd.baseline_ = true;
    return mfd;
  }

  Index m() const { return m_; }
  Index n() const { return n_; }
  Index r() const { return r_; }
  Index q() const { return q_; }
  bool is_baseline() const { return baseline_; }
  double rank_tol() const { return rank_tol_; }
  const Matrix& expression() const { return c_; }
  const Matrix& null_basis() const { return w_; }

  /// Submanifold dimension (m + n - r) r - q.
  long dimension() const {
    return (static_cast<long>(m_) + n_ - r_) * r_ - q_;
  }

  /// Right-multiplication by P_W = W W^T (identity in baseline mode).
  Matrix apply_null_projection(const Matrix& z) const {
    if (baseline_) return z;
    return (z * w_) * w_.transpose();
  }

  /// ||X (C - I)||_F; zero by convention in baseline mode.
  double membership_residual(const Matrix& x) const {
    if (baseline_) return 0.0;
    return (x * c_ - x).norm();
  }

  friend SelfExpressiveManifold make_manifold(const Matrix& c, Index r, Index m,
                                              double rank_tol);

private:
  SelfExpressiveManifold() = default;

  Matrix c_;
  Matrix w_;
  Index m_ = 0, n_ = 0, r_ = 0, q_ = 0;
  double rank_tol_ = 0.0;
  bool baseline_ = false;
};

/// Builds the manifold from an expression matrix C (square, zero diagonal).
/// rank_tol <= 0 selects the default numerical-rank threshold. Throws
/// InfeasibleRankError when n - q < r, i.e. no rank-r point exists.
inline SelfExpressiveManifold make_manifold(const Matrix& c, Index r, Index m,
                                            double rank_tol = -1.0) {
  if (c.rows() != c.cols() || c.rows() < 1) {
    throw DimensionError("make_manifold: C must be square");
  }
  require_finite(c, "make_manifold");
  const Index n = c.rows();
  if (m < 1 || r < 1 || r > std::min(m, n)) {
    throw DimensionError("make_manifold: bad m or r");
  }
  for (Index i = 0; i < n; ++i) {
    if (c(i, i) != 0.0) {
      throw std::invalid_argument("make_manifold: C must have an exactly zero diagonal");
    }
  }
  const double tol = rank_tol > 0.0 ? rank_tol : default_rank_tol(n, n);
  Matrix k = (c - Matrix::Identity(n, n)).transpose();
  auto [w, q] = null_space_basis(k, tol);
  if (n - q < r) {
    throw InfeasibleRankError("make_manifold: rank of C - I leaves no rank-" +
                                  std::to_string(r) + " point (n - q = " +
                                  std::to_string(n - q) + ")",
                              q);
  }
  SelfExpressiveManifold mfd;
  mfd.c_ = c;
  mfd.w_ = std::move(w);
  mfd.m_ = m;
  mfd.n_ = n;
  mfd.r_ = r;
  mfd.q_ = q;
  mfd.rank_tol_ = tol;
  mfd.baseline_ = false;
  return mfd;
}

/// Ambient m x n increment living in the tangent space at `base`.
struct TangentVector {
  Matrix ambient;
  FixedRankPoint base;

  double norm() const { return ambient.norm(); }
};

inline TangentVector operator*(double s, const TangentVector& t) {
  return TangentVector{s * t.ambient, t.base};
}

namespace detail {

inline void require_on_manifold(const SelfExpressiveManifold& mfd, const Matrix& x_emb) {
  if (mfd.is_baseline()) return;
  const double res = mfd.membership_residual(x_emb);
  if (res > 1e-6 * x_emb.norm()) {
    throw BasePointError("base point off manifold: ||X(C-I)|| = " + std::to_string(res));
  }
}

// Classical fixed-rank tangent projector P_U Z P_V + (I-P_U) Z P_V + P_U Z (I-P_V),
// evaluated through the thin factors as P_U Z + Z P_V - P_U Z P_V.
inline Matrix fixed_rank_projection(const FixedRankPoint& x, const Matrix& z) {
  const Matrix utz = x.f.u.transpose() * z;   // r x n
  const Matrix zv = z * x.f.v;                // m x r
  return x.f.u * utz + zv * x.f.v.transpose() - x.f.u * (utz * x.f.v) * x.f.v.transpose();
}

}  // namespace detail

/// Orthogonal projection of an ambient Z onto the tangent space at X:
/// the fixed-rank projector followed by right-multiplication with P_W.
inline TangentVector project_tangent(const SelfExpressiveManifold& mfd,
                                     const FixedRankPoint& x, const Matrix& z) {
  if (x.rows() != mfd.m() || x.cols() != mfd.n() || x.rank() != mfd.r()) {
    throw DimensionError("project_tangent: point does not match manifold");
  }
  require_same_shape(z, Matrix::Zero(mfd.m(), mfd.n()), "project_tangent");
  require_finite(z, "project_tangent");
  detail::require_on_manifold(mfd, embed(x));
  Matrix t = detail::fixed_rank_projection(x, z);
  return TangentVector{mfd.apply_null_projection(t), x};
}

enum class RetractStatus { ok, near_degenerate, rank_deficient };

struct RetractResult {
  std::optional<FixedRankPoint> point;
  RetractStatus status = RetractStatus::ok;

  bool succeeded() const { return point.has_value(); }
};

/// Metric projection retraction: rank-r truncated SVD of X + xi.
/// A zero step returns the base point unchanged. Signals rank_deficient
/// (no point) when sigma_r falls below the rank threshold, and flags
/// near_degenerate when the truncation is not well separated.
inline RetractResult retract(const SelfExpressiveManifold& mfd, const TangentVector& xi) {
  const FixedRankPoint& x = xi.base;
  const Index r = mfd.r();
  if (xi.ambient.norm() == 0.0) {
    return RetractResult{x, RetractStatus::ok};
  }
  Matrix y = embed(x) + xi.ambient;
  SvdFactors f = svd(y);
  const double smax = f.sigma(0);
  if (!(smax > 0.0) || f.sigma(r - 1) < mfd.rank_tol() * smax) {
    return RetractResult{std::nullopt, RetractStatus::rank_deficient};
  }
  RetractStatus status = RetractStatus::ok;
  if (r < f.sigma.size() && (f.sigma(r - 1) - f.sigma(r)) / smax < 1e-10) {
    status = RetractStatus::near_degenerate;
  }
  FixedRankPoint out{SvdFactors{f.u.leftCols(r), f.sigma.head(r), f.v.leftCols(r)}};
  return RetractResult{std::move(out), status};
}

/// Nearest manifold point to an ambient matrix: project rows onto range(W),
/// then truncate to rank r. Throws InfeasibleRankError when the projected
/// matrix has rank below r.
inline FixedRankPoint point_from_ambient(const Matrix& a, const SelfExpressiveManifold& mfd,
                                         Index r) {
  if (a.rows() != mfd.m() || a.cols() != mfd.n()) {
    throw DimensionError("point_from_ambient: shape mismatch");
  }
  if (r != mfd.r()) throw DimensionError("point_from_ambient: rank mismatch");
  require_finite(a, "point_from_ambient");
  Matrix b = mfd.apply_null_projection(a);
  SvdFactors f = svd(b);
  const double smax = f.sigma(0);
  if (!(smax > 0.0) || f.sigma(r - 1) <= mfd.rank_tol() * smax) {
    throw InfeasibleRankError("point_from_ambient: projected matrix has rank < r");
  }
  return FixedRankPoint{SvdFactors{f.u.leftCols(r), f.sigma.head(r), f.v.leftCols(r)}};
}

}  // namespace semc
