#pragma once

// Shared numerical substrate: uniform time grids, trajectories sampled on
// them, fixed-step RK4 in both time directions, the l1-type norms used by the
// convergence analysis, transition matrices and spectral radius.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bilens/errors.hpp"

namespace bilens {

class TimeGrid {
 public:
  TimeGrid(double t0, double tf, int steps);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  int steps() const { return steps_; }
  double step() const { return (tf_ - t0_) / steps_; }
  std::size_t size() const { return static_cast<std::size_t>(steps_) + 1; }

  double node(std::size_t i) const {
    if (i == static_cast<std::size_t>(steps_)) return tf_;
    return t0_ + static_cast<double>(i) * step();
  }
  std::vector<double> nodes() const;

  bool operator==(const TimeGrid& other) const = default;

 private:
  double t0_;
  double tf_;
  int steps_;
};

namespace detail {

inline bool all_finite(double v) { return std::isfinite(v); }
template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

inline std::pair<Eigen::Index, Eigen::Index> shape_of(double) { return {1, 1}; }
template <class Derived>
std::pair<Eigen::Index, Eigen::Index> shape_of(const Eigen::MatrixBase<Derived>& v) {
  return {v.rows(), v.cols()};
}

}  // namespace detail

/// Values of a function of time at every node of a grid. Between nodes the
/// trajectory is read as the piecewise-linear interpolant.
template <class T>
class GriddedTrajectory {
 public:
  GriddedTrajectory(TimeGrid grid, std::vector<T> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw InvalidArgument("trajectory has " + std::to_string(values_.size()) +
                            " values for a grid of " + std::to_string(grid_.size()) +
                            " nodes");
    }
    const auto shape = detail::shape_of(values_.front());
    for (const auto& v : values_) {
      if (detail::shape_of(v) != shape) {
        throw InvalidArgument("trajectory values do not share one shape");
      }
    }
  }

  /// Constant trajectory.
  static GriddedTrajectory constant(const TimeGrid& grid, const T& value) {
    return GriddedTrajectory(grid, std::vector<T>(grid.size(), value));
  }

  const TimeGrid& grid() const { return grid_; }
  const std::vector<T>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  const T& operator[](std::size_t i) const { return values_[i]; }
  const T& front() const { return values_.front(); }
  const T& back() const { return values_.back(); }

  /// Piecewise-linear value at time t, exact at nodes.
  T at(double t) const {
    if (!(t >= grid_.t0() && t <= grid_.tf())) {
      throw InvalidArgument("interpolation time " + std::to_string(t) +
                            " outside [" + std::to_string(grid_.t0()) + ", " +
                            std::to_string(grid_.tf()) + "]");
    }
    const double h = grid_.step();
    const double pos = (t - grid_.t0()) / h;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= values_.size() - 1) return values_.back();
    const double w = pos - static_cast<double>(i);
    if (w == 0.0) return values_[i];
    return T((1.0 - w) * values_[i] + w * values_[i + 1]);
  }

 private:
  TimeGrid grid_;
  std::vector<T> values_;
};

using VectorTrajectory = GriddedTrajectory<Eigen::VectorXd>;
using MatrixTrajectory = GriddedTrajectory<Eigen::MatrixXd>;
using ScalarTrajectory = GriddedTrajectory<double>;

template <class T>
T interp(const GriddedTrajectory<T>& traj, double t) {
  return traj.at(t);
}

template <class T>
using Field = std::function<T(double, const T&)>;

/// Optional in-place fix-up applied after every accepted step.
template <class T>
using StepHook = std::function<void(T&)>;

/// Classical RK4 from t0 to tf with step (tf - t0) / steps.
template <class T>
GriddedTrajectory<T> integrate_forward(const Field<T>& field, const T& y0,
                                       const TimeGrid& grid,
                                       const StepHook<T>& post_step = {}) {
  const double h = grid.step();
  std::vector<T> ys;
  ys.reserve(grid.size());
  ys.push_back(y0);
  if (!detail::all_finite(y0)) throw NumericalBlowUp(0, grid.t0());
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid.node(i);
    const T& y = ys.back();
    const T k1 = field(t, y);
    const T k2 = field(t + 0.5 * h, T(y + (0.5 * h) * k1));
    const T k3 = field(t + 0.5 * h, T(y + (0.5 * h) * k2));
    const T k4 = field(grid.node(i + 1), T(y + h * k3));
    T next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (post_step) post_step(next);
    if (!detail::all_finite(next)) throw NumericalBlowUp(i + 1, grid.node(i + 1));
    ys.push_back(std::move(next));
  }
  return GriddedTrajectory<T>(grid, std::move(ys));
}

/// Classical RK4 from the terminal value yT at tf back to t0.
template <class T>
GriddedTrajectory<T> integrate_backward(const Field<T>& field, const T& yT,
                                        const TimeGrid& grid,
                                        const StepHook<T>& post_step = {}) {
  const double h = grid.step();
  const std::size_t n = grid.size();
  std::vector<T> ys(n, yT);
  if (!detail::all_finite(yT)) throw NumericalBlowUp(n - 1, grid.tf());
  for (std::size_t i = n - 1; i > 0; --i) {
    const double t = grid.node(i);
    const T& y = ys[i];
    const T k1 = field(t, y);
    const T k2 = field(t - 0.5 * h, T(y - (0.5 * h) * k1));
    const T k3 = field(t - 0.5 * h, T(y - (0.5 * h) * k2));
    const T k4 = field(grid.node(i - 1), T(y - h * k3));
    T next = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (post_step) post_step(next);
    if (!detail::all_finite(next)) throw NumericalBlowUp(i - 1, grid.node(i - 1));
    ys[i - 1] = std::move(next);
  }
  return GriddedTrajectory<T>(grid, std::move(ys));
}

/// Sum of absolute entries.
double vec_norm(const Eigen::Ref<const Eigen::VectorXd>& v);
/// Maximum absolute column sum.
double mat_norm(const Eigen::Ref<const Eigen::MatrixXd>& d);

enum class WeightDirection { kForward, kBackward };

/// sup over nodes of ||y(t_i)|| exp(-alpha t_i) (forward) or
/// ||y(t_i)|| exp(-alpha (tf - t_i)) (backward).
double alpha_norm(const VectorTrajectory& traj, double alpha, WeightDirection dir);
double alpha_norm(const MatrixTrajectory& traj, double alpha, WeightDirection dir);
double alpha_norm(const ScalarTrajectory& traj, double alpha, WeightDirection dir);

using MatrixFn = std::function<Eigen::MatrixXd(double)>;

/// Transition matrices of y' = F(t) y on a grid. Φ(t_i, t0) is integrated
/// once; Φ(t_i, t_j) = Φ(t_i, t0) Φ(t_j, t0)^{-1}.
class TransitionTable {
 public:
  TransitionTable(const MatrixFn& field, const TimeGrid& grid);

  const TimeGrid& grid() const { return grid_; }
  Eigen::MatrixXd operator()(std::size_t i, std::size_t j) const;
  const Eigen::MatrixXd& from_start(std::size_t i) const { return from_start_[i]; }

 private:
  TimeGrid grid_;
  std::vector<Eigen::MatrixXd> from_start_;
  std::vector<Eigen::MatrixXd> inverse_;
};

TransitionTable transition_table(const MatrixFn& field, const TimeGrid& grid);

double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace bilens
