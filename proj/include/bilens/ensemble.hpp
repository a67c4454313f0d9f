#pragma once

// Sampling a parameter box and stacking the sampled systems into one problem
// driven by a single shared control.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "bilens/model.hpp"
#include "bilens/solver.hpp"

namespace bilens {

/// Coefficients of one ensemble member.
struct SampleSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<Eigen::MatrixXd> bilinear;
  Eigen::VectorXd g;
  Eigen::VectorXd x0;
  Eigen::VectorXd xd;
};

using CoefficientMap = std::function<SampleSystem(const Eigen::VectorXd& beta)>;

struct ParamBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
};

struct EnsembleSpec {
  ParamBox box;
  int q = 1;
  CoefficientMap coeffs;
  Eigen::Index base_n = 0;
  Eigen::Index base_m = 0;
  double tf = 1.0;
  Eigen::MatrixXd R;

  /// Throws InvalidArgument on an inconsistent spec.
  void validate() const;
};

/// Equally spaced samples including both endpoints (midpoint when q = 1). For
/// d > 1 a tensor grid with floor(q^(1/d)) points per axis, bumped up axis by
/// axis while the product stays <= q.
std::vector<Eigen::VectorXd> sample_uniform(const EnsembleSpec& spec);

/// Stacks the members: A and each B_i block-diagonal, B stacked vertically
/// (shared control), g, x0, xd stacked, terminal weight 1/q.
BilinearProblem stack_problem(const EnsembleSpec& spec, const std::vector<Eigen::VectorXd>& samples);

/// (1/q) sum_j ||X_j(tf) - Xd_j||^2 over the stacked terminal state.
double terminal_cost_riemann(const EnsembleSpec& spec, const std::vector<Eigen::VectorXd>& samples,
                             const Eigen::VectorXd& x_tf);

/// The j-th member's block of a stacked vector.
Eigen::VectorXd member_block(const Eigen::VectorXd& stacked, Eigen::Index base_n, int j);

struct RefinementRow {
  int q = 0;
  double terminal_cost = 0.0;  ///< J_1
  double cost = 0.0;           ///< J
  int iterations = 0;
  bool converged = false;
};

std::vector<RefinementRow> refinement_study(EnsembleSpec spec, const std::vector<int>& q_sequence,
                                            const SolveOptions& opts);

}  // namespace bilens
