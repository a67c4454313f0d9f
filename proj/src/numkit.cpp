#include "bilens/numkit.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace bilens {

TimeGrid::TimeGrid(double t0, double tf, int steps) : t0_(t0), tf_(tf), steps_(steps) {
  if (!(std::isfinite(t0) && std::isfinite(tf)) || !(tf > t0)) {
    throw InvalidArgument("time grid needs tf > t0");
  }
  if (steps < 2) throw InvalidArgument("time grid needs at least 2 steps");
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
  return out;
}

double vec_norm(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.lpNorm<1>(); }

double mat_norm(const Eigen::Ref<const Eigen::MatrixXd>& d) {
  if (d.size() == 0) return 0.0;
  return d.cwiseAbs().colwise().sum().maxCoeff();
}

namespace {

double weight(const TimeGrid& grid, std::size_t i, double alpha, WeightDirection dir) {
  if (alpha == 0.0) return 1.0;
  const double t = grid.node(i);
  return dir == WeightDirection::kForward ? std::exp(-alpha * t)
                                          : std::exp(-alpha * (grid.tf() - t));
}

template <class T, class NormFn>
double weighted_sup(const GriddedTrajectory<T>& traj, double alpha, WeightDirection dir,
                    NormFn norm) {
  if (alpha < 0.0) throw InvalidArgument("alpha must be non-negative");
  double best = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    best = std::max(best, norm(traj[i]) * weight(traj.grid(), i, alpha, dir));
  }
  return best;
}

}  // namespace

double alpha_norm(const VectorTrajectory& traj, double alpha, WeightDirection dir) {
  return weighted_sup(traj, alpha, dir, [](const Eigen::VectorXd& v) { return vec_norm(v); });
}

double alpha_norm(const MatrixTrajectory& traj, double alpha, WeightDirection dir) {
  return weighted_sup(traj, alpha, dir, [](const Eigen::MatrixXd& m) { return mat_norm(m); });
}

double alpha_norm(const ScalarTrajectory& traj, double alpha, WeightDirection dir) {
  return weighted_sup(traj, alpha, dir, [](double v) { return std::abs(v); });
}

TransitionTable::TransitionTable(const MatrixFn& field, const TimeGrid& grid) : grid_(grid) {
  const Eigen::MatrixXd f0 = field(grid.t0());
  if (f0.rows() != f0.cols()) throw InvalidArgument("transition field must be square");
  const Field<Eigen::MatrixXd> rhs = [&field](double t, const Eigen::MatrixXd& phi) {
    return Eigen::MatrixXd(field(t) * phi);
  };
  auto traj = integrate_forward<Eigen::MatrixXd>(
      rhs, Eigen::MatrixXd::Identity(f0.rows(), f0.cols()), grid);
  from_start_ = traj.values();
  inverse_.reserve(from_start_.size());
  for (std::size_t i = 0; i < from_start_.size(); ++i) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(from_start_[i]);
    if (!(lu.rcond() > 1e-14)) throw TransitionInversionFailure(i);
    inverse_.push_back(lu.inverse());
  }
}

Eigen::MatrixXd TransitionTable::operator()(std::size_t i, std::size_t j) const {
  return from_start_.at(i) * inverse_.at(j);
}

TransitionTable transition_table(const MatrixFn& field, const TimeGrid& grid) {
  return TransitionTable(field, grid);
}

double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("spectral radius needs a square matrix");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw Error("eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace bilens
