// Dense linear-algebra kernels: SVD with deterministic sign convention,
// numerical null-space bases, masked (sampling) operators and Frobenius
// geometry. Everything here is a pure function of its inputs.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace semc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

class DimensionError : public std::invalid_argument {
public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a construction cannot host a rank-r point; carries the
// offending null-space rank q when known.
class InfeasibleRankError : public std::runtime_error {
public:
  InfeasibleRankError(const std::string& what, Index q = -1)
      : std::runtime_error(what), q_(q) {}
  Index q() const { return q_; }

private:
  Index q_;
};

inline void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entries");
  }
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch (" +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

// Numerical rank threshold, relative to the largest singular value.
// 1e3 * max(dim) * eps is the 1e-10 class for double at desk sizes.
inline double default_rank_tol(Index rows, Index cols) {
  return 1e3 * static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

/// Index set Omega with 0/1 mask semantics for the sampling operator.
struct SamplingPattern {
  BoolArray mask;

  Index rows() const { return mask.rows(); }
  Index cols() const { return mask.cols(); }
  Index observed_count() const { return mask.count(); }

  static SamplingPattern full(Index m, Index n) {
    return SamplingPattern{BoolArray::Constant(m, n, true)};
  }
  static SamplingPattern none(Index m, Index n) {
    return SamplingPattern{BoolArray::Constant(m, n, false)};
  }
};

/// Compact SVD triple; U, V column-orthonormal, sigma nonincreasing.
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;

  Index k() const { return sigma.size(); }
  Index rows() const { return u.rows(); }
  Index cols() const { return v.rows(); }

  Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

namespace detail {

// Deterministic sign convention: the largest-magnitude entry of each U
// column is nonnegative; V flips along with U.
inline void canonicalize_signs(Matrix& u, Matrix& v) {
  for (Index k = 0; k < u.cols(); ++k) {
    Index imax = 0;
    u.col(k).cwiseAbs().maxCoeff(&imax);
    if (u(imax, k) < 0.0) {
      u.col(k) = -u.col(k);
      v.col(k) = -v.col(k);
    }
  }
}

inline SvdFactors thin_svd(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw NumericalError("svd: decomposition did not converge");
  }
  SvdFactors f{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  canonicalize_signs(f.u, f.v);
  return f;
}

}  // namespace detail

/// Full (thin) SVD of a; factors carry the deterministic sign convention.
inline SvdFactors svd(const Matrix& a) {
  require_finite(a, "svd");
  if (a.rows() < 1 || a.cols() < 1) throw DimensionError("svd: empty matrix");
  return detail::thin_svd(a);
}

/// Top-k singular triplets; the reconstruction is the best rank-k
/// Frobenius approximation of a.
inline SvdFactors svd(const Matrix& a, Index k) {
  if (k < 1 || k > std::min(a.rows(), a.cols())) {
    throw DimensionError("svd: k out of range");
  }
  SvdFactors f = svd(a);
  return SvdFactors{f.u.leftCols(k), f.sigma.head(k), f.v.leftCols(k)};
}

/// Orthonormal basis W of ker(a) together with q, the numerical rank of a:
/// q counts singular values above rank_tol * sigma_max. W has n - q columns
/// (zero columns when a has full column rank).
inline std::pair<Matrix, Index> null_space_basis(const Matrix& a, double rank_tol) {
  require_finite(a, "null_space_basis");
  if (rank_tol <= 0.0) throw std::invalid_argument("null_space_basis: rank_tol must be > 0");
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeFullV);
  if (dec.info() != Eigen::Success) {
    throw NumericalError("null_space_basis: decomposition did not converge");
  }
  const Vector& s = dec.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Index q = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > rank_tol * smax) ++q;
  }
  const Index n = a.cols();
  Matrix w = dec.matrixV().rightCols(n - q);
  return {std::move(w), q};
}

/// P_Omega: keep entries in the pattern, zero all others. Idempotent, linear.
inline Matrix apply_mask(const Matrix& a, const SamplingPattern& omega) {
  if (a.rows() != omega.rows() || a.cols() != omega.cols()) {
    throw DimensionError("apply_mask: pattern shape mismatch");
  }
  return omega.mask.select(a.array(), 0.0).matrix();
}

inline double frobenius_norm(const Matrix& a) { return a.norm(); }

/// tr(A^T B); reduces to the squared Frobenius norm when a == b.
inline double inner_product(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner_product");
  return (a.array() * b.array()).sum();
}

}  // namespace semc
