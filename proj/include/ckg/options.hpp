#pragma once

namespace ckg {

struct SolverOptions {
  double newton_tol = 1e-10;       // max-norm of the weak residual
  int max_newton_iters = 50;
  double initial_tau_step = 0.25;
  double min_tau_step = 1e-4;
  double damping = 0.5;            // backtracking factor
  int max_halvings = 20;
  double clamp_margin = 1e-6;      // iterates stay below interval_end - clamp_margin

  /// Throws ParameterError on non-positive entries or
  /// min_tau_step > initial_tau_step > 1.
  void validate() const;
};

}  // namespace ckg
