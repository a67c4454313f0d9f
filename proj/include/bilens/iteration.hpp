#pragma once

#include "bilens/model.hpp"
#include "bilens/numkit.hpp"

namespace bilens {

/// One iterate of the frozen-coefficient scheme. x, p, u, s are n-, n-, m-,
/// n-vector valued; K is n x n; q is the scalar part of the value function.
struct IterationState {
  int k = 0;
  VectorTrajectory x;
  VectorTrajectory p;
  VectorTrajectory u;
  MatrixTrajectory K;
  VectorTrajectory s;
  ScalarTrajectory q;
  double cost = 0.0;
  /// sup over nodes of ||x^(k) - x^(k-1)||_1; +inf for the initial iterate.
  double diff_x = 0.0;
  /// ||Õ||, node-wise, of the frozen coefficient this iterate was built from.
  ScalarTrajectory frozen_o_norm;
};

/// Ã and Õ evaluated along an iterate, node by node.
struct FrozenCoefficients {
  MatrixTrajectory a_tilde;
  MatrixTrajectory o_tilde;
};

FrozenCoefficients freeze(const BilinearProblem& prob, const NFamily& N,
                          const IterationState& state);

}  // namespace bilens
