#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bilens/errors.hpp"

namespace bilens {

/// Free-endpoint quadratic problem for an inhomogeneous bilinear system
///
///   x' = A x + B u + (sum_i u_i B_i) x + g,   x(0) = x0,
///   J  = 1/2 int u^T R u dt + w ||x(tf) - xd||^2.
///
/// Immutable after construction; R is checked to be symmetric positive
/// definite and its inverse is cached.
class BilinearProblem {
 public:
  BilinearProblem(Eigen::MatrixXd A, Eigen::MatrixXd B, std::vector<Eigen::MatrixXd> bilinear,
                  Eigen::VectorXd g, Eigen::VectorXd x0, Eigen::VectorXd xd, double tf,
                  Eigen::MatrixXd R, double terminal_weight = 1.0);

  Eigen::Index n() const { return A_.rows(); }
  Eigen::Index m() const { return B_.cols(); }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  /// The B_i, one n x n matrix per control channel.
  const std::vector<Eigen::MatrixXd>& bilinear() const { return bilinear_; }
  const Eigen::VectorXd& g() const { return g_; }
  const Eigen::VectorXd& x0() const { return x0_; }
  const Eigen::VectorXd& xd() const { return xd_; }
  double tf() const { return tf_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const Eigen::MatrixXd& R_inv() const { return R_inv_; }
  double terminal_weight() const { return terminal_weight_; }

  /// B R^{-1} B^T.
  const Eigen::MatrixXd& input_gramian() const { return BRBt_; }

  /// True when every B_i vanishes, i.e. the problem is an affine LQR problem.
  bool is_linear() const;

  /// Copies with one field replaced.
  BilinearProblem with_g(Eigen::VectorXd g) const;
  BilinearProblem with_R(Eigen::MatrixXd R) const;

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  std::vector<Eigen::MatrixXd> bilinear_;
  Eigen::VectorXd g_;
  Eigen::VectorXd x0_;
  Eigen::VectorXd xd_;
  double tf_;
  Eigen::MatrixXd R_;
  double terminal_weight_;
  Eigen::MatrixXd R_inv_;
  Eigen::MatrixXd BRBt_;
};

/// The N_j (n x m) with (sum_i u_i B_i) x = (sum_j x_j N_j) u.
struct NFamily {
  std::vector<Eigen::MatrixXd> N;

  /// sum_j x_j N_j.
  Eigen::MatrixXd contract(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// [N_j]_{k,i} = [B_i]_{k,j}.
NFamily assemble_N(const std::vector<Eigen::MatrixXd>& bilinear);

/// Λ = B + sum_j x_j N_j.
Eigen::MatrixXd lambda_of(const BilinearProblem& prob, const NFamily& N,
                          const Eigen::Ref<const Eigen::VectorXd>& x);

/// Ã_ij = A_ij - [(N_j R^{-1} Λ^T + Λ R^{-1} N_j^T) p]_i.
Eigen::MatrixXd a_tilde(const BilinearProblem& prob, const NFamily& N,
                        const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& p);

/// Õ = B R^{-1} B^T - (sum x_j N_j) R^{-1} (sum x_j N_j)^T. Symmetric, possibly
/// indefinite.
Eigen::MatrixXd o_tilde(const BilinearProblem& prob, const NFamily& N,
                        const Eigen::Ref<const Eigen::VectorXd>& x);

/// ||(Ã x - Õ p) - (A x - Λ R^{-1} Λ^T p)||_1.
double consistency_identity_check(const BilinearProblem& prob, const NFamily& N,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& p);

/// Right-hand side of the original bilinear dynamics.
Eigen::VectorXd bilinear_rhs(const BilinearProblem& prob,
                             const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u);

}  // namespace bilens
