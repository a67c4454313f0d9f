#pragma once

// Reference solutions for constant-coefficient linear problems built from
// matrix exponentials of the Hamiltonian system. Shares no code with the
// solver's RK4 sweeps.

#include <Eigen/Dense>
#include <vector>

namespace bilens::testing {

struct AffineLqr {
  Eigen::MatrixXd A, B, R;
  Eigen::VectorXd g, x0, xd;
  double tf = 1.0;
  double w = 1.0;
};

struct LqrSolution {
  std::vector<Eigen::VectorXd> x, p, u;
};

/// Optimal x, p, u of  x' = Ax + Bu + g,  J = 1/2 int u'Ru + w|x(tf) - xd|^2
/// at the given times, by solving for p(0) exactly.
LqrSolution affine_lqr(const AffineLqr& prob, const std::vector<double>& times);

/// K(t) of K' = -KA - A'K + KOK, K(tf) = KT, via K = Y X^{-1} with
/// [X; Y](t) = exp(H (t - tf)) [I; KT].
Eigen::MatrixXd riccati_exact(const Eigen::MatrixXd& A, const Eigen::MatrixXd& O,
                              const Eigen::MatrixXd& KT, double tf, double t);

}  // namespace bilens::testing
