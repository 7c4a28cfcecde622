// Outer alternating minimization: initialize the expression matrix from the
// side-information basis, then alternate the manifold descent for X with the
// l1 expression update for C until X stabilizes. A baseline mode runs the
// plain fixed-rank descent with no expression machinery, serving as the
// side-information-free reference.

#pragma once

#include <chrono>
#include <random>

#include "semc/expression.hpp"
#include "semc/solver.hpp"
#include "semc/synth.hpp"

namespace semc {

struct CompletionConfig {
  Index r = 1;
  int outer_max_iters = 50;
  double outer_tol_rel = 1e-6;
  SolverConfig solver;
  ExpressionSettings expression;
  // Slack for the initial expression solve. The initial constraints
  // B'^T (C - I) = 0 are underdetermined and exactly satisfiable for any
  // basis, so this stays tight regardless of the update slack; negative
  // means "inherit expression.eps_rel".
  double init_eps_rel = 1e-8;
  bool baseline_mode = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (r < 1) throw std::invalid_argument("CompletionConfig: r must be >= 1");
    if (outer_max_iters < 1) throw std::invalid_argument("CompletionConfig: outer_max_iters >= 1");
    if (!(outer_tol_rel > 0.0)) throw std::invalid_argument("CompletionConfig: outer_tol_rel > 0");
    solver.validate();
    expression.validate();
  }
};

struct OuterRecord {
  int outer_iter = 0;
  double inner_objective = 0.0;  // final objective of the inner solve
  double c_l1 = 0.0;             // ||C_{k+1}||_1
  double x_rel_change = 0.0;
  int inner_iterations = 0;
  TerminationReason inner_reason = TerminationReason::max_iterations;
  double membership_residual = 0.0;      // relative, at the inner solution
  double post_update_residual = 0.0;     // ||X(C_new - I)|| / ||X|| after the C update
  Index infeasible_columns = 0;
  double null_tol = 0.0;
  bool null_tol_relaxed = false;
  double seconds = 0.0;
};

struct CompletionResult {
  Matrix x_hat;
  ExpressionMatrix c_hat;  // empty in baseline mode
  std::vector<OuterRecord> outer_trace;
  std::vector<SolveTrace> inner_traces;
  std::string termination_reason;
  double max_membership_residual = 0.0;  // relative, across all inner iterates
  Index q = 0;                           // of the final manifold
  long manifold_dimension = 0;

  void write_outer_csv(std::ostream& os) const {
    os << "outer_iter,inner_objective,c_l1,x_rel_change,inner_iterations,"
          "inner_reason,membership_residual,infeasible_columns\n";
    os.precision(17);
    for (const auto& row : outer_trace) {
      os << row.outer_iter << ',' << row.inner_objective << ',' << row.c_l1 << ','
         << row.x_rel_change << ',' << row.inner_iterations << ','
         << to_string(row.inner_reason) << ',' << row.membership_residual << ','
         << row.infeasible_columns << '\n';
    }
  }
};

struct DimensionReport {
  Index m = 0, n = 0, r = 0, q = 0;
  long dimension = 0;
  Index observed = 0;
  double dof_ratio = 0.0;  // dimension / observed entries
};

inline DimensionReport dimension_report(const SelfExpressiveManifold& mfd,
                                        const SamplingPattern& omega) {
  DimensionReport rep;
  rep.m = mfd.m();
  rep.n = mfd.n();
  rep.r = mfd.r();
  rep.q = mfd.q();
  rep.dimension = mfd.dimension();
  rep.observed = omega.observed_count();
  rep.dof_ratio = rep.observed > 0
                      ? static_cast<double>(rep.dimension) / static_cast<double>(rep.observed)
                      : std::numeric_limits<double>::infinity();
  return rep;
}

namespace detail {

// Null-space threshold for a C produced with feasibility slack eps: the
// spectrum of C - I splits into structural values and an eps-scale tail, so
// the cut sits a decade above the slack (never below the dense default).
inline double null_tol_for_expression(Index n, double eps_rel) {
  return std::max(default_rank_tol(n, n), 10.0 * eps_rel);
}

struct ManifoldBuild {
  SelfExpressiveManifold mfd;
  double tol_used = 0.0;
  bool relaxed = false;
};

// Builds the manifold, relaxing the threshold just enough to admit rank r
// when the straightforward cut leaves too small a null space. The relaxation
// is flagged so adversarial side information is visible in the trace.
inline ManifoldBuild manifold_from_expression(const Matrix& c, Index r, Index m,
                                              double eps_rel) {
  const Index n = c.rows();
  const double tol = null_tol_for_expression(n, eps_rel);
  try {
    return ManifoldBuild{make_manifold(c, r, m, tol), tol, false};
  } catch (const InfeasibleRankError&) {
  }
  SvdFactors f = svd((c - Matrix::Identity(n, n)).transpose());
  const double smax = f.sigma(0);
  if (!(smax > 0.0)) throw InfeasibleRankError("manifold_from_expression: C - I vanished");
  // Keep at least r directions: cut just above the (n - r + 1)-th value.
  const double relaxed = f.sigma(n - r) / smax * (1.0 + 1e-9) + default_rank_tol(n, n);
  return ManifoldBuild{make_manifold(c, r, m, relaxed), relaxed, true};
}

// Rank-r starting point inside the manifold's null-space range: project the
// zero-filled observations, and when that falls short of rank r, add small
// seeded perturbations inside range(W) until it does not.
inline FixedRankPoint initial_point(const Matrix& m_obs, const SelfExpressiveManifold& mfd,
                                    std::uint64_t seed) {
  Matrix base = mfd.apply_null_projection(m_obs);
  std::mt19937_64 gen(mix_seed(seed, 0x1417));
  for (int attempt = 0; attempt < 16; ++attempt) {
    SvdFactors f = svd(base);
    if (f.sigma(0) > 0.0 && f.sigma(mfd.r() - 1) > mfd.rank_tol() * f.sigma(0)) {
      return FixedRankPoint{
          SvdFactors{f.u.leftCols(mfd.r()), f.sigma.head(mfd.r()), f.v.leftCols(mfd.r())}};
    }
    const double scale =
        f.sigma(0) > 0.0 ? 1e-6 * f.sigma(0)
                         : std::max(1e-6, 1e-6 * m_obs.norm());
    base += scale * mfd.apply_null_projection(gaussian_matrix(mfd.m(), mfd.n(), gen));
  }
  throw InfeasibleRankError("initial_point: could not reach rank r inside range(W)");
}

}  // namespace detail

/// Full completion run. M_obs must vanish off the pattern; B' is the n x r
/// side-information basis (ignored in baseline mode, where it may be empty).
inline CompletionResult complete(const Matrix& m_obs, const SamplingPattern& omega,
                                 const Matrix& b_prime, const CompletionConfig& cfg) {
  cfg.validate();
  require_finite(m_obs, "complete");
  if (m_obs.rows() != omega.rows() || m_obs.cols() != omega.cols()) {
    throw DimensionError("complete: observation/pattern shape mismatch");
  }
  if ((apply_mask(m_obs, omega) - m_obs).norm() != 0.0) {
    throw std::invalid_argument("complete: M_obs must vanish off the sampling pattern");
  }
  const Index m = m_obs.rows(), n = m_obs.cols();

  CompletionResult result;

  if (cfg.baseline_mode) {
    SelfExpressiveManifold mfd = SelfExpressiveManifold::baseline(m, n, cfg.r);
    FixedRankPoint x0 = detail::initial_point(m_obs, mfd, cfg.seed);
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult res = solve(mfd, x0, m_obs, omega, cfg.solver);
    OuterRecord row;
    row.outer_iter = 0;
    row.inner_objective = res.trace.final_objective;
    row.inner_iterations = static_cast<int>(res.trace.iterations.size());
    row.inner_reason = res.trace.reason;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.outer_trace.push_back(row);
    result.inner_traces.push_back(std::move(res.trace));
    result.x_hat = embed(res.x);
    result.termination_reason = "baseline-solve";
    result.q = 0;
    result.manifold_dimension = mfd.dimension();
    return result;
  }

  if (b_prime.rows() != n || b_prime.cols() != cfg.r) {
    throw DimensionError("complete: B' must be n x r");
  }
  require_finite(b_prime, "complete");

  ExpressionSettings init_settings = cfg.expression;
  if (cfg.init_eps_rel >= 0.0) init_settings.eps_rel = cfg.init_eps_rel;
  ExpressionMatrix expr = init_expression(b_prime, init_settings);
  detail::ManifoldBuild build =
      detail::manifold_from_expression(expr.c, cfg.r, m, init_settings.eps_rel);

  FixedRankPoint x = detail::initial_point(m_obs, build.mfd, cfg.seed);
  Matrix prev_emb = embed(x);
  result.termination_reason = "max-outer-iterations";

  for (int k = 0; k < cfg.outer_max_iters; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult res = solve(build.mfd, x, m_obs, omega, cfg.solver);
    x = std::move(res.x);
    Matrix emb = embed(x);
    result.max_membership_residual =
        std::max(result.max_membership_residual, res.trace.max_membership_residual);

    OuterRecord row;
    row.outer_iter = k;
    row.inner_objective = res.trace.final_objective;
    row.inner_iterations = static_cast<int>(res.trace.iterations.size());
    row.inner_reason = res.trace.reason;
    row.membership_residual = build.mfd.membership_residual(emb) / emb.norm();
    row.null_tol = build.tol_used;
    row.null_tol_relaxed = build.relaxed;
    result.inner_traces.push_back(std::move(res.trace));

    // Expression update on the current completion; infeasible columns keep
    // their previous coefficients so the alternation stays monotone.
    ExpressionMatrix updated = update_expression(emb, cfg.expression);
    for (Index j = 0; j < n; ++j) {
      if (updated.infeasible[static_cast<size_t>(j)]) {
        updated.c.col(j) = expr.c.col(j);
        updated.residuals(j) = (emb * updated.c.col(j) - emb.col(j)).norm();
        updated.column_l1(j) = updated.c.col(j).lpNorm<1>();
        ++row.infeasible_columns;
      }
    }
    updated.objective = updated.column_l1.sum();
    expr = std::move(updated);
    row.c_l1 = expr.objective;
    row.post_update_residual = (emb * expr.c - emb).norm() / emb.norm();

    const double rel_change = (emb - prev_emb).norm() / prev_emb.norm();
    row.x_rel_change = rel_change;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.outer_trace.push_back(row);
    prev_emb = emb;

    if (rel_change <= cfg.outer_tol_rel) {
      result.termination_reason = "converged";
      break;
    }
    if (k + 1 >= cfg.outer_max_iters) break;

    // Next manifold from the refreshed expression; warm-start by
    // re-projecting the current iterate onto it.
    build = detail::manifold_from_expression(expr.c, cfg.r, m, cfg.expression.eps_rel);
    try {
      x = point_from_ambient(emb, build.mfd, cfg.r);
    } catch (const InfeasibleRankError&) {
      x = detail::initial_point(emb, build.mfd, mix_seed(cfg.seed, 0x7e57, k));
    }
  }

  result.x_hat = prev_emb;
  result.c_hat = std::move(expr);
  result.q = build.mfd.q();
  result.manifold_dimension = build.mfd.dimension();
  return result;
}

}  // namespace semc
