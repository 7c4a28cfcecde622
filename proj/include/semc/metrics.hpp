// Recovery-error metrics: full-matrix and observed-entries-only normalized
// squared errors.

#pragma once

#include "semc/dense.hpp"

namespace semc {

inline double nmse(const Matrix& m, const Matrix& m_hat) {
  require_same_shape(m, m_hat, "nmse");
  const double denom = m.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("nmse: zero reference norm");
  return (m - m_hat).squaredNorm() / denom;
}

inline double rnmse(const Matrix& m, const Matrix& m_hat, const SamplingPattern& omega) {
  require_same_shape(m, m_hat, "rnmse");
  Matrix pm = apply_mask(m, omega);
  const double denom = pm.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("rnmse: zero masked reference norm");
  return (pm - apply_mask(m_hat, omega)).squaredNorm() / denom;
}

}  // namespace semc
