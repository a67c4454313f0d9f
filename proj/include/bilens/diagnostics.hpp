#pragma once

// Contraction bookkeeping for the fixed-point map (x, K, s) -> (T1, T2, T3)
// and optimality checks for a converged iterate.
//
// The bound coefficients mirror the structure of the contraction estimate:
// nine β factors built from the transition matrix of the adjoint closed loop
// x' = -[Ã - Õ K]^T x, the R^{-1}-dependent constants δ and ζ, and a 3 x 3
// matrix M whose first column decides the criterion |m11| + |m21| + |m31| < 1.
// The integrals hidden in M are bounded by the horizon length tf. The result
// is a conservative indicator; the solver never gates on it.

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "bilens/iteration.hpp"
#include "bilens/model.hpp"
#include "bilens/numkit.hpp"

namespace bilens {

struct DeltaZeta {
  double delta = 0.0;
  double zeta = 0.0;
};

/// δ = sqrt(sum_i ||P_i||^2), ζ = sqrt(sum_ij ||Q_ij||^2) with
/// P_i = N_i R^{-1} B^T + B R^{-1} N_i^T and Q_ij = N_i R^{-1} N_j^T + N_j R^{-1} N_i^T.
DeltaZeta delta_zeta(const BilinearProblem& prob, const NFamily& N);

struct BetaCoefficients {
  /// Subsampled evaluation times t.
  std::vector<double> times;
  /// by_time[r][i] = sup over admissible σ of β_{r+1}(σ, times[i]).
  std::array<std::vector<double>, 9> by_time;
  std::array<double, 9> sup{};
};

/// β_1..β_9 for the step prev (iterate k) -> cur (iterate k+1). β_1..β_5 take
/// σ >= t, β_6..β_9 take σ <= t. In both groups the transition factor is the
/// variation-of-constants kernel carrying the later of (σ, t) back to the
/// earlier one: Φ itself for the backward sweeps, Φ^T (the closed-loop
/// transition) for the forward state. Only every `subsample`-th node enters
/// the pair sweep.
BetaCoefficients beta_coefficients(const BilinearProblem& prob, const NFamily& N,
                                   const IterationState& prev, const IterationState& cur,
                                   int subsample = 10);

/// Sup-norms of the iterates that enter M.
struct IterateNorms {
  double x_k = 0.0;    ///< ||x^(k)||
  double x_km1 = 0.0;  ///< ||x^(k-1)||
  double K_k = 0.0;    ///< ||K^(k)||
  double s_k = 0.0;    ///< ||s^(k)||
};

Eigen::Matrix3d m_matrix(const std::array<double, 9>& beta, const DeltaZeta& dz,
                         const IterateNorms& norms, double horizon);

struct CriterionResult {
  double criterion_sum = 0.0;
  bool satisfied = false;
  double rho = 0.0;
};

CriterionResult criterion_check(const Eigen::Matrix3d& M);

struct ContractionReport {
  int k = 0;  ///< index of the iterate produced by the step
  std::array<double, 9> betas{};
  double delta = 0.0;
  double zeta = 0.0;
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  double criterion_sum = 0.0;
  double rho = 0.0;
  bool satisfied = false;
  /// α-weighted differences (||Δx||, ||ΔK||, ||Δs||) between prev and cur.
  Eigen::Vector3d alpha_diffs = Eigen::Vector3d::Zero();
};

/// Full report for one step; x_km1_norm is ||x^(k-1)|| (the iterate before prev).
ContractionReport contraction_report(const BilinearProblem& prob, const NFamily& N,
                                     const IterationState& prev, const IterationState& cur,
                                     double x_km1_norm, double alpha, int subsample = 10);

struct ConvergenceReport {
  std::vector<ContractionReport> steps;
  /// First iterate index at which the criterion holds, if any.
  std::optional<int> crossover_iteration() const;
};

struct HjbResidual {
  ScalarTrajectory residual;
  double sup_abs = 0.0;
  /// sup over nodes of |V_t| + |V_x^T f| + |u^T R u / 2|.
  double term_scale = 0.0;
  double relative() const { return sup_abs / (1.0 + term_scale); }
};

/// Residual of V_t + V_x^T [A x + Λ u + g] + u^T R u / 2 along the iterate,
/// with V = x^T K x / 2 + x^T s + q / 2, V_x = K x + s and V_t assembled from
/// the Riccati, affine and scalar sweep right-hand sides. The frozen
/// coefficients are evaluated on `final` itself.
HjbResidual hjb_residual(const BilinearProblem& prob, const NFamily& N,
                         const IterationState& final);

struct NecessaryConditionResidual {
  double state_sup = 0.0;
  double costate_sup = 0.0;
  double state_scale = 0.0;
  double costate_scale = 0.0;
  double state_relative() const { return state_sup / (1.0 + state_scale); }
  double costate_relative() const { return costate_sup / (1.0 + costate_scale); }
};

/// Central-difference derivatives of x and p against x' = Ãx - Õp + g and
/// p' = -Ã^T p on interior nodes (one-sided at the ends).
NecessaryConditionResidual necessary_condition_residual(const BilinearProblem& prob,
                                                        const NFamily& N,
                                                        const IterationState& final);

}  // namespace bilens
