#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bilens/diagnostics.hpp"
#include "bilens/iteration.hpp"
#include "bilens/model.hpp"
#include "bilens/numkit.hpp"

namespace bilens {

enum class StopRule { kIterateDiff, kTargetDistance, kBoth };

std::string to_string(StopRule rule);
StopRule parse_stop_rule(const std::string& name);

struct SolveOptions {
  int steps = 2000;
  int max_iters = 200;
  StopRule stop_rule = StopRule::kIterateDiff;
  double tol = 1e-12;
  /// Weight of the exponential norms used by the diagnostics.
  double alpha = 0.0;
  bool record_diagnostics = false;
  int beta_subsample = 10;
  /// Seed control for iteration 0. Empty means the uncontrolled flow.
  std::function<Eigen::VectorXd(double)> initial_control;

  void validate() const;
};

struct HistoryEntry {
  int k = 0;
  double diff_x = 0.0;
  double cost = 0.0;
  /// ||x(tf) - xd||_2
  double terminal_distance = 0.0;
};

struct SolveResult {
  IterationState final;
  bool converged = false;
  int iterations_used = 0;
  std::vector<HistoryEntry> history;
  std::optional<ConvergenceReport> diagnostics;
};

// --- sweeps -----------------------------------------------------------------

/// Backward RK4 of K' = -K Ã - Ã^T K + K Õ K from K(tf) = K_T, symmetrized
/// after every step. Throws RiccatiEscape on blow-up.
MatrixTrajectory riccati_sweep(const MatrixFn& a_field, const MatrixFn& o_field,
                               const Eigen::MatrixXd& K_T, const TimeGrid& grid);

/// Backward RK4 of s' = -(Ã^T - K Õ) s - K g from s(tf) = s_T.
VectorTrajectory s_sweep(const MatrixFn& a_field, const MatrixFn& o_field,
                         const MatrixTrajectory& K, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& s_T, const TimeGrid& grid);

/// Backward RK4 of q' = s^T Õ s - 2 s^T g from q(tf) = q_T.
ScalarTrajectory q_sweep(const MatrixFn& o_field, const VectorTrajectory& s,
                         const Eigen::VectorXd& g, const TimeGrid& grid, double q_T = 0.0);

/// Forward RK4 of x' = (Ã - Õ K) x - Õ s + g from x0.
VectorTrajectory forward_state(const MatrixFn& a_field, const MatrixFn& o_field,
                               const MatrixTrajectory& K, const VectorTrajectory& s,
                               const Eigen::VectorXd& g, const Eigen::VectorXd& x0,
                               const TimeGrid& grid);

/// u(t_i) = -R^{-1} Λ(x(t_i))^T p(t_i).
VectorTrajectory control_reconstruct(const BilinearProblem& prob, const NFamily& N,
                                     const VectorTrajectory& x, const VectorTrajectory& p);

// --- iteration ----------------------------------------------------------------

/// x = flow of the bilinear dynamics under `seed` (uncontrolled flow of
/// x' = A x + g when empty), u = seed, p = K = s = q = 0.
IterationState initial_iterate(const BilinearProblem& prob, const NFamily& N,
                               const TimeGrid& grid,
                               const std::function<Eigen::VectorXd(double)>& seed = {});

/// One frozen-coefficient LQR solve around `prev`.
IterationState iterate_once(const BilinearProblem& prob, const NFamily& N,
                            const IterationState& prev, const TimeGrid& grid);

/// Runs the fixed-point loop. Non-convergence within max_iters is reported
/// through SolveResult::converged; sweep blow-ups propagate as exceptions
/// annotated with the iteration index.
SolveResult solve(const BilinearProblem& prob, const SolveOptions& opts);

// --- costs and validation -----------------------------------------------------

/// Trapezoidal 1/2 int u^T R u dt + w ||x_tf - xd||_2^2.
double evaluate_cost(const BilinearProblem& prob, const VectorTrajectory& u,
                     const Eigen::VectorXd& x_tf);

/// 1/2 int p^T Õ p dt + w ||x(tf) - xd||^2: the cost the frozen LQR problem
/// assigns to its own optimal trajectory.
double frozen_problem_cost(const BilinearProblem& prob, const MatrixTrajectory& o_tilde,
                           const IterationState& state);

/// V(t_i, x) = x^T K x / 2 + x^T s + q / 2 (with q(tf) = 0).
double value_function(const IterationState& state, std::size_t node,
                      const Eigen::VectorXd& x);

/// Constant w ||xd||^2 separating value_function from the cost-to-go.
double value_offset(const BilinearProblem& prob);

/// Forward RK4 of the original bilinear dynamics under the interpolated control.
VectorTrajectory resimulate_bilinear(const BilinearProblem& prob, const VectorTrajectory& u);

/// ||x(tf) - xd||_2.
double terminal_distance(const BilinearProblem& prob, const Eigen::VectorXd& x_tf);

}  // namespace bilens
