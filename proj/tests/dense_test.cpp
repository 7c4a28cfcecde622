#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "semc/dense.hpp"

namespace {

using namespace semc;

Matrix random_matrix(Index m, Index n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Matrix a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = dist(gen);
  return a;
}

SamplingPattern random_pattern(Index m, Index n, double p, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  SamplingPattern pat = SamplingPattern::none(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) pat.mask(i, j) = dist(gen) < p;
  return pat;
}

TEST(Svd, IdentityCase) {
  SvdFactors f = svd(Matrix::Identity(3, 3));
  EXPECT_LT((f.sigma - Vector::Ones(3)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((f.reconstruct() - Matrix::Identity(3, 3)).norm(), 1e-13);
  EXPECT_LT((f.u * f.v.transpose() - Matrix::Identity(3, 3)).norm(), 1e-13);
}

TEST(Svd, DiagonalTruncated) {
  Matrix a = Matrix::Zero(3, 4);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  SvdFactors f = svd(a, 2);
  ASSERT_EQ(f.k(), 2);
  EXPECT_NEAR(f.sigma(0), 3.0, 1e-13);
  EXPECT_NEAR(f.sigma(1), 2.0, 1e-13);
}

TEST(Svd, ReconstructionAgainstMultiplyBackOracle) {
  Matrix a = random_matrix(6, 5, 1001);
  SvdFactors f = svd(a);
  EXPECT_LE((a - f.reconstruct()).norm(), 1e-10 * a.norm());
  EXPECT_LT((f.u.transpose() * f.u - Matrix::Identity(5, 5)).norm(), 1e-10);
  EXPECT_LT((f.v.transpose() * f.v - Matrix::Identity(5, 5)).norm(), 1e-10);
}

TEST(Svd, SignConventionIsDeterministic) {
  Matrix a = random_matrix(5, 4, 1002);
  SvdFactors f1 = svd(a);
  SvdFactors f2 = svd(Matrix(a));
  EXPECT_EQ((f1.u - f2.u).norm(), 0.0);
  EXPECT_EQ((f1.v - f2.v).norm(), 0.0);
  for (Index k = 0; k < f1.u.cols(); ++k) {
    Index imax = 0;
    f1.u.col(k).cwiseAbs().maxCoeff(&imax);
    EXPECT_GE(f1.u(imax, k), 0.0);
  }
}

TEST(Svd, EckartYoungSpotCheck) {
  std::mt19937_64 gen(4242);
  std::normal_distribution<double> dist;
  for (int rep = 0; rep < 8; ++rep) {
    Matrix a = random_matrix(4, 5, 2000 + static_cast<unsigned>(rep));
    for (Index k = 1; k <= 3; ++k) {
      SvdFactors f = svd(a, k);
      const double best = (a - f.reconstruct()).norm();
      for (int trial = 0; trial < 40; ++trial) {
        Matrix l(4, k), r(k, 5);
        for (Index i = 0; i < l.size(); ++i) l(i) = dist(gen);
        for (Index i = 0; i < r.size(); ++i) r(i) = dist(gen);
        // Scale the candidate toward a for a fair comparison.
        Matrix cand = l * r;
        const double s = inner_product(cand, a) / std::max(1e-30, inner_product(cand, cand));
        EXPECT_LE(best, (a - s * cand).norm() + 1e-12);
      }
    }
  }
}

TEST(Svd, RejectsBadInputs) {
  EXPECT_THROW(svd(random_matrix(3, 3, 7), 4), DimensionError);
  EXPECT_THROW(svd(random_matrix(3, 3, 7), 0), DimensionError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd(bad), NumericalError);
}

TEST(NullSpace, ZeroMatrix) {
  auto [w, q] = null_space_basis(Matrix::Zero(4, 4), 1e-10);
  EXPECT_EQ(q, 0);
  ASSERT_EQ(w.cols(), 4);
  EXPECT_LT((w.transpose() * w - Matrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(NullSpace, FullRankIdentity) {
  auto [w, q] = null_space_basis(Matrix::Identity(5, 5), 1e-10);
  EXPECT_EQ(q, 5);
  EXPECT_EQ(w.cols(), 0);
}

TEST(NullSpace, RandomLowRankAgainstRankOracle) {
  Matrix a = random_matrix(8, 3, 55) * random_matrix(3, 8, 56);
  const double tol = default_rank_tol(8, 8);
  auto [w, q] = null_space_basis(a, tol);
  EXPECT_EQ(q, oracle::rank_count(a, tol));
  EXPECT_EQ(w.cols(), 8 - q);
  const double smax = svd(a).sigma(0);
  EXPECT_LE((a * w).norm(), 10.0 * tol * smax * std::sqrt(8.0));
  EXPECT_LT((w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).norm(), 1e-10);
}

TEST(NullSpace, WideMatrixIncludesTrailingDirections) {
  Matrix a = random_matrix(2, 6, 58);
  auto [w, q] = null_space_basis(a, 1e-10);
  EXPECT_EQ(q, 2);
  EXPECT_EQ(w.cols(), 4);
  EXPECT_LT((a * w).norm(), 1e-10 * a.norm());
}

TEST(Mask, FullAndEmpty) {
  Matrix a = random_matrix(3, 4, 60);
  EXPECT_EQ((apply_mask(a, SamplingPattern::full(3, 4)) - a).norm(), 0.0);
  EXPECT_EQ(apply_mask(a, SamplingPattern::none(3, 4)).norm(), 0.0);
}

TEST(Mask, IdempotentAndLinear) {
  Matrix a = random_matrix(5, 6, 61);
  Matrix b = random_matrix(5, 6, 62);
  SamplingPattern pat = random_pattern(5, 6, 0.4, 63);
  Matrix ma = apply_mask(a, pat);
  EXPECT_EQ((apply_mask(ma, pat) - ma).norm(), 0.0);
  Matrix lhs = apply_mask(2.5 * a - 0.75 * b, pat);
  Matrix rhs = 2.5 * apply_mask(a, pat) - 0.75 * apply_mask(b, pat);
  EXPECT_LE((lhs - rhs).norm(), 1e-12 * (lhs.norm() + 1.0));
}

TEST(Mask, ShapeMismatchThrows) {
  EXPECT_THROW(apply_mask(Matrix::Zero(2, 2), SamplingPattern::full(3, 2)), DimensionError);
}

TEST(Geometry, InnerProductAndNorm) {
  EXPECT_DOUBLE_EQ(inner_product(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), 2.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::Zero(3, 3)), 0.0);
  Matrix a = random_matrix(7, 5, 71);
  Matrix b = random_matrix(7, 5, 72);
  const double ip = inner_product(a, b);
  EXPECT_NEAR(ip, oracle::loop_inner_product(a, b), 1e-12 * std::abs(ip));
  EXPECT_NEAR(inner_product(a, a), frobenius_norm(a) * frobenius_norm(a),
              1e-12 * inner_product(a, a));
  EXPECT_THROW(inner_product(a, Matrix::Zero(5, 7)), DimensionError);
}

TEST(Pattern, ObservedCountMatchesMask) {
  SamplingPattern pat = random_pattern(6, 7, 0.3, 73);
  Index manual = 0;
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 7; ++j) manual += pat.mask(i, j) ? 1 : 0;
  EXPECT_EQ(pat.observed_count(), manual);
}

}  // namespace
