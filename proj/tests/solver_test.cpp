#include <gtest/gtest.h>

#include "semc/solver.hpp"
#include "test_support.hpp"

namespace {

using namespace semc;
using namespace semc::test_support;

struct Instance {
  SelfExpressiveManifold mfd;
  FixedRankPoint truth;
  Matrix m_obs;
  SamplingPattern omega;
};

// Planted instance: the ground truth lies on the manifold, observations are a
// Bernoulli mask of it.
Instance planted_instance(Index m, Index n, Index r, Index null_dim, double p,
                          unsigned seed) {
  Matrix c = expression_with_null_dim(n, null_dim, seed);
  SelfExpressiveManifold mfd = make_manifold(c, r, m);
  FixedRankPoint truth = random_point_on(mfd, seed + 7);
  SamplingPattern omega = random_pattern(m, n, p, seed + 11);
  Matrix m_obs = apply_mask(embed(truth), omega);
  return Instance{std::move(mfd), std::move(truth), std::move(m_obs), std::move(omega)};
}

TEST(Gradient, ZeroResidualGivesZeroGradient) {
  Instance inst = planted_instance(6, 8, 2, 5, 0.7, 301);
  TangentVector g = riemannian_gradient(inst.mfd, inst.truth, inst.m_obs, inst.omega);
  EXPECT_LE(g.norm(), 1e-12 * inst.m_obs.norm());
}

TEST(Gradient, EmptyPatternGivesZeroGradient) {
  Instance inst = planted_instance(6, 8, 2, 5, 0.7, 302);
  SamplingPattern none = SamplingPattern::none(6, 8);
  Matrix zero = Matrix::Zero(6, 8);
  FixedRankPoint x = random_point_on(inst.mfd, 303);
  EXPECT_EQ(riemannian_gradient(inst.mfd, x, zero, none).norm(), 0.0);
}

TEST(Gradient, MatchesRetractionFiniteDifferences) {
  for (unsigned seed : {310u, 320u, 330u}) {
    Instance inst = planted_instance(7, 9, 2, 5, 0.6, seed);
    FixedRankPoint x = random_point_on(inst.mfd, seed + 1);
    auto f = [&](const FixedRankPoint& p) {
      return 0.5 * (apply_mask(embed(p), inst.omega) - inst.m_obs).squaredNorm();
    };
    TangentVector grad = riemannian_gradient(inst.mfd, x, inst.m_obs, inst.omega);
    ASSERT_GT(grad.norm(), 0.0);
    const double f0 = f(x);
    int checked = 0;
    for (unsigned t = 0; t < 20 && checked < 10; ++t) {
      Matrix dir = parameterized_tangent(inst.mfd, x, seed + 40 + t);
      TangentVector xi{dir / dir.norm(), x};
      const double ip = inner_product(grad.ambient, xi.ambient);
      if (std::abs(ip) < 1e-3 * grad.norm()) continue;  // avoid near-orthogonal dirs
      const double h = 1e-6;
      RetractResult r = retract(inst.mfd, h * xi);
      ASSERT_TRUE(r.succeeded());
      const double fd = (f(*r.point) - f0) / h;
      EXPECT_LE(std::abs(fd - ip), 1e-4 * std::abs(ip));
      ++checked;
    }
    EXPECT_EQ(checked, 10);
  }
}

TEST(Armijo, QuadraticFixtureAcceptsFullStep) {
  Instance inst = planted_instance(6, 8, 2, 5, 1.0, 341);
  FixedRankPoint x = random_point_on(inst.mfd, 342);
  Matrix target = embed(inst.truth);
  auto f = [&](const FixedRankPoint& p) { return 0.5 * (embed(p) - target).squaredNorm(); };
  TangentVector grad = project_tangent(inst.mfd, x, embed(x) - target);
  SolverConfig cfg;
  ArmijoResult res = armijo_step(inst.mfd, x, -1.0 * grad, f, cfg);
  ASSERT_TRUE(res.next.has_value());
  EXPECT_EQ(res.backtracks, 0);
  EXPECT_LT(f(*res.next), f(x));
}

TEST(Armijo, OversizedStepBacktracks) {
  Instance inst = planted_instance(6, 8, 2, 5, 1.0, 351);
  FixedRankPoint x = random_point_on(inst.mfd, 352);
  Matrix target = embed(inst.truth);
  auto f = [&](const FixedRankPoint& p) { return 0.5 * (embed(p) - target).squaredNorm(); };
  TangentVector grad = project_tangent(inst.mfd, x, embed(x) - target);
  TangentVector huge = 1e6 * (-1.0 * grad);
  SolverConfig cfg;
  // sigma * scale must stay below 1 or sufficient decrease is unreachable at
  // any m (the threshold grows quadratically with the direction's length).
  cfg.sigma = 1e-8;
  ArmijoResult res = armijo_step(inst.mfd, x, huge, f, cfg);
  ASSERT_TRUE(res.next.has_value());
  EXPECT_GT(res.backtracks, 0);
}

TEST(Armijo, ExhaustionReportsNoPoint) {
  Instance inst = planted_instance(6, 8, 2, 5, 1.0, 361);
  FixedRankPoint x = random_point_on(inst.mfd, 362);
  // An ascent direction never satisfies sufficient decrease.
  Matrix target = embed(inst.truth);
  auto f = [&](const FixedRankPoint& p) { return 0.5 * (embed(p) - target).squaredNorm(); };
  TangentVector grad = project_tangent(inst.mfd, x, embed(x) - target);
  SolverConfig cfg;
  cfg.max_backtracks = 8;
  ArmijoResult res = armijo_step(inst.mfd, x, grad, f, cfg);
  EXPECT_FALSE(res.next.has_value());
}

TEST(Solve, OptimalStartStopsImmediately) {
  Instance inst = planted_instance(6, 8, 2, 5, 0.8, 371);
  SolverConfig cfg;
  SolveResult res = solve(inst.mfd, inst.truth, inst.m_obs, inst.omega, cfg);
  EXPECT_EQ(res.trace.reason, TerminationReason::gradient_tolerance);
  EXPECT_EQ(res.trace.accepted_steps, 0);
  ASSERT_EQ(res.trace.iterations.size(), 1u);
  EXPECT_LE((embed(res.x) - embed(inst.truth)).norm(), 1e-12 * embed(inst.truth).norm());
}

TEST(Solve, RecoversPlantedMatrixFromPartialObservations) {
  Instance inst = planted_instance(8, 12, 2, 3, 0.8, 381);
  FixedRankPoint x0 = random_point_on(inst.mfd, 382);
  SolverConfig cfg;
  cfg.max_iters = 2000;
  SolveResult res = solve(inst.mfd, x0, inst.m_obs, inst.omega, cfg);
  EXPECT_LE(res.trace.final_objective, 1e-8 * inst.m_obs.squaredNorm());
  EXPECT_LE(res.trace.max_membership_residual, 1e-8);
}

TEST(Solve, ObjectiveStrictlyDecreasesAcrossAcceptedIterations) {
  Instance inst = planted_instance(7, 10, 2, 4, 0.6, 391);
  FixedRankPoint x0 = random_point_on(inst.mfd, 392);
  SolverConfig cfg;
  cfg.max_iters = 60;
  SolveResult res = solve(inst.mfd, x0, inst.m_obs, inst.omega, cfg);
  const auto& rows = res.trace.iterations;
  ASSERT_GE(rows.size(), 2u);
  for (size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].objective, rows[i - 1].objective);
  }
}

TEST(Solve, ScaleCovariance) {
  Instance inst = planted_instance(6, 9, 2, 4, 0.7, 401);
  FixedRankPoint x0 = random_point_on(inst.mfd, 402);
  SolverConfig cfg;
  cfg.max_iters = 40;
  SolveResult base = solve(inst.mfd, x0, inst.m_obs, inst.omega, cfg);

  const double c = 3.5;
  FixedRankPoint x0s = x0;
  x0s.f.sigma *= c;
  SolveResult scaled = solve(inst.mfd, x0s, c * inst.m_obs, inst.omega, cfg);

  ASSERT_EQ(base.trace.iterations.size(), scaled.trace.iterations.size());
  Matrix lhs = embed(scaled.x);
  Matrix rhs = c * embed(base.x);
  EXPECT_LE((lhs - rhs).norm(), 1e-10 * rhs.norm());
  for (size_t i = 0; i < base.trace.iterations.size(); ++i) {
    EXPECT_EQ(base.trace.iterations[i].backtracks, scaled.trace.iterations[i].backtracks);
  }
}

TEST(Solve, DeterministicAcrossRepeatedRuns) {
  Instance inst = planted_instance(7, 10, 3, 5, 0.6, 411);
  FixedRankPoint x0 = random_point_on(inst.mfd, 412);
  SolverConfig cfg;
  cfg.max_iters = 30;
  SolveResult a = solve(inst.mfd, x0, inst.m_obs, inst.omega, cfg);
  SolveResult b = solve(inst.mfd, x0, inst.m_obs, inst.omega, cfg);
  ASSERT_EQ(a.trace.iterations.size(), b.trace.iterations.size());
  EXPECT_EQ((embed(a.x) - embed(b.x)).norm(), 0.0);
  for (size_t i = 0; i < a.trace.iterations.size(); ++i) {
    EXPECT_EQ(a.trace.iterations[i].objective, b.trace.iterations[i].objective);
    EXPECT_EQ(a.trace.iterations[i].backtracks, b.trace.iterations[i].backtracks);
  }
}

TEST(Solve, RejectsUnmaskedObservations) {
  Instance inst = planted_instance(6, 8, 2, 5, 0.5, 421);
  Matrix bad = embed(inst.truth);  // supported everywhere
  if (inst.omega.observed_count() == 6 * 8) GTEST_SKIP();
  SolverConfig cfg;
  EXPECT_THROW(solve(inst.mfd, inst.truth, bad, inst.omega, cfg), std::invalid_argument);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  cfg.beta = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.tau_abs = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(SolveTrace, CsvHasExpectedSchema) {
  Instance inst = planted_instance(6, 8, 2, 5, 0.7, 431);
  FixedRankPoint x0 = random_point_on(inst.mfd, 432);
  SolverConfig cfg;
  cfg.max_iters = 5;
  SolveResult res = solve(inst.mfd, x0, inst.m_obs, inst.omega, cfg);
  std::ostringstream os;
  res.trace.write_csv(os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "iter,objective,grad_norm,step,backtracks");
  size_t rows = 0;
  std::string line;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, res.trace.iterations.size());
}

}  // namespace
