// Riemannian gradient descent with Armijo backtracking for the masked
// completion objective f(X) = 1/2 ||P_Omega(X) - M_obs||_F^2 over a
// self-expressive fixed-rank manifold.

#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "semc/manifold.hpp"

namespace semc {

struct SolverConfig {
  double alpha_bar = 1.0;  // initial step
  double beta = 0.5;       // backtracking shrink factor
  double sigma = 1e-4;     // sufficient-decrease constant
  // Gradient-norm tolerance: relative to ||M_obs||_F by default, or an
  // absolute override when tau_abs is set.
  double tau_rel = 1e-6;
  std::optional<double> tau_abs;
  int max_iters = 500;
  int max_backtracks = 50;

  void validate() const {
    if (!(alpha_bar > 0.0)) throw std::invalid_argument("SolverConfig: alpha_bar must be > 0");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("SolverConfig: beta in (0,1)");
    if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("SolverConfig: sigma in (0,1)");
    if (!(tau_rel > 0.0) && !tau_abs) throw std::invalid_argument("SolverConfig: tau must be > 0");
    if (tau_abs && !(*tau_abs > 0.0)) throw std::invalid_argument("SolverConfig: tau must be > 0");
    if (max_iters < 1 || max_backtracks < 1) {
      throw std::invalid_argument("SolverConfig: iteration limits must be >= 1");
    }
  }
};

enum class TerminationReason { gradient_tolerance, max_iterations, stalled_step };

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::gradient_tolerance: return "gradient-tolerance";
    case TerminationReason::max_iterations: return "max-iterations";
    case TerminationReason::stalled_step: return "stalled-step";
  }
  return "unknown";
}

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;    // f at the iterate before stepping
  double grad_norm = 0.0;
  double step = 0.0;         // accepted alpha_bar * beta^m (0 on the final record)
  int backtracks = 0;
  double membership_residual = 0.0;  // ||X(C-I)||_F / ||X||_F after the step
  double seconds = 0.0;
};

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  TerminationReason reason = TerminationReason::max_iterations;
  double final_objective = 0.0;
  double final_grad_norm = 0.0;
  double max_membership_residual = 0.0;  // relative, across all accepted iterates
  int near_degenerate_retractions = 0;
  int accepted_steps = 0;

  void write_csv(std::ostream& os) const {
    os << "iter,objective,grad_norm,step,backtracks\n";
    os.precision(17);
    for (const auto& row : iterations) {
      os << row.iter << ',' << row.objective << ',' << row.grad_norm << ','
         << row.step << ',' << row.backtracks << '\n';
    }
  }
};

/// Gradient of the restricted objective: the masked residual projected onto
/// the tangent space at X. Requires M_obs to be supported on Omega.
inline TangentVector riemannian_gradient(const SelfExpressiveManifold& mfd,
                                         const FixedRankPoint& x, const Matrix& m_obs,
                                         const SamplingPattern& omega) {
  Matrix residual = apply_mask(embed(x), omega) - m_obs;
  return project_tangent(mfd, x, residual);
}

struct ArmijoResult {
  std::optional<FixedRankPoint> next;
  int backtracks = 0;  // the accepted m; equals the trial count on failure
  RetractStatus last_status = RetractStatus::ok;
};

/// Smallest m >= 0 with f(X) - f(R_X(alpha_bar beta^m xi)) >= sigma alpha_bar
/// beta^m <xi, xi>. Rank-deficient retractions are skipped and count toward
/// max_backtracks. Returns no point when the budget is exhausted.
template <typename Objective>
ArmijoResult armijo_step(const SelfExpressiveManifold& mfd, const FixedRankPoint& x,
                         const TangentVector& xi, Objective&& f, const SolverConfig& cfg) {
  cfg.validate();
  const double f0 = f(x);
  const double gg = inner_product(xi.ambient, xi.ambient);
  if (gg == 0.0) throw std::invalid_argument("armijo_step: zero direction");
  ArmijoResult result;
  for (int m = 0; m <= cfg.max_backtracks; ++m) {
    const double t = cfg.alpha_bar * std::pow(cfg.beta, m);
    RetractResult r = retract(mfd, t * xi);
    result.backtracks = m;
    result.last_status = r.status;
    if (!r.succeeded()) continue;  // shrink further
    if (f0 - f(*r.point) >= cfg.sigma * t * gg) {
      result.next = std::move(r.point);
      return result;
    }
  }
  result.next.reset();
  return result;
}

struct SolveResult {
  FixedRankPoint x;
  SolveTrace trace;
};

/// Gradient descent with Armijo backtracking, stopping on the gradient
/// tolerance, the iteration cap, or a stalled step (which is reported, not
/// thrown). Every accepted iterate stays on the manifold by construction.
inline SolveResult solve(const SelfExpressiveManifold& mfd, const FixedRankPoint& x0,
                         const Matrix& m_obs, const SamplingPattern& omega,
                         const SolverConfig& cfg) {
  cfg.validate();
  if (m_obs.rows() != mfd.m() || m_obs.cols() != mfd.n()) {
    throw DimensionError("solve: observation shape mismatch");
  }
  require_finite(m_obs, "solve");
  if ((apply_mask(m_obs, omega) - m_obs).norm() != 0.0) {
    throw std::invalid_argument("solve: M_obs must vanish off the sampling pattern");
  }

  const double tau = cfg.tau_abs ? *cfg.tau_abs : cfg.tau_rel * m_obs.norm();
  auto objective = [&](const FixedRankPoint& p) {
    return 0.5 * (apply_mask(embed(p), omega) - m_obs).squaredNorm();
  };

  SolveResult out{x0, {}};
  FixedRankPoint& x = out.x;
  SolveTrace& trace = out.trace;

  for (int i = 0; i < cfg.max_iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    TangentVector grad = riemannian_gradient(mfd, x, m_obs, omega);
    const double gn = grad.norm();
    const double f0 = objective(x);

    if (gn < tau || gn == 0.0) {
      trace.reason = TerminationReason::gradient_tolerance;
      trace.final_objective = f0;
      trace.final_grad_norm = gn;
      trace.iterations.push_back({i, f0, gn, 0.0, 0, 0.0, 0.0});
      return out;
    }

    ArmijoResult step = armijo_step(mfd, x, -1.0 * grad, objective, cfg);
    if (!step.next) {
      trace.reason = TerminationReason::stalled_step;
      trace.final_objective = f0;
      trace.final_grad_norm = gn;
      trace.iterations.push_back({i, f0, gn, 0.0, step.backtracks, 0.0, 0.0});
      return out;
    }
    if (step.last_status == RetractStatus::near_degenerate) {
      ++trace.near_degenerate_retractions;
    }

    x = std::move(*step.next);
    ++trace.accepted_steps;
    Matrix emb = embed(x);
    const double rel_res =
        mfd.is_baseline() ? 0.0 : mfd.membership_residual(emb) / emb.norm();
    trace.max_membership_residual = std::max(trace.max_membership_residual, rel_res);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.iterations.push_back({i, f0, gn,
                                cfg.alpha_bar * std::pow(cfg.beta, step.backtracks),
                                step.backtracks, rel_res, seconds});
    trace.final_objective = objective(x);
    trace.final_grad_norm = gn;
  }
  trace.reason = TerminationReason::max_iterations;
  return out;
}

}  // namespace semc
