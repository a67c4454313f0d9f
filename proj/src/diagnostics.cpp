#include "bilens/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "bilens/solver.hpp"

namespace bilens {

DeltaZeta delta_zeta(const BilinearProblem& prob, const NFamily& N) {
  const auto n = N.N.size();
  const Eigen::MatrixXd rinv_bt = prob.R_inv() * prob.B().transpose();
  double delta_sq = 0.0;
  std::vector<Eigen::MatrixXd> n_rinv;
  n_rinv.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXd half = N.N[i] * rinv_bt;
    delta_sq += std::pow(mat_norm(half + half.transpose()), 2);
    n_rinv.push_back(N.N[i] * prob.R_inv());
  }
  double zeta_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const Eigen::MatrixXd half = n_rinv[i] * N.N[j].transpose();
      const double q = mat_norm(half + half.transpose());
      zeta_sq += (i == j ? 1.0 : 2.0) * q * q;
    }
  }
  return {std::sqrt(delta_sq), std::sqrt(zeta_sq)};
}

BetaCoefficients beta_coefficients(const BilinearProblem& prob, const NFamily& N,
                                   const IterationState& prev, const IterationState& cur,
                                   int subsample) {
  if (subsample < 1) throw InvalidArgument("subsample factor must be positive");
  const TimeGrid& grid = prev.x.grid();
  const FrozenCoefficients frozen = freeze(prob, N, prev);
  const MatrixFn adjoint_closed_loop = [&](double t) {
    return Eigen::MatrixXd(-(frozen.a_tilde.at(t) - frozen.o_tilde.at(t) * cur.K.at(t)).transpose());
  };
  const TransitionTable phi(adjoint_closed_loop, grid);

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < grid.size(); i += static_cast<std::size_t>(subsample)) idx.push_back(i);
  if (idx.back() != grid.size() - 1) idx.push_back(grid.size() - 1);

  const double g_norm = vec_norm(prob.g());
  struct NodeNorms {
    double s_k, K_k, K_k1, o_km1, x_k, s_k1;
  };
  std::vector<NodeNorms> nn;
  nn.reserve(idx.size());
  for (auto i : idx) {
    nn.push_back({vec_norm(prev.s[i]), mat_norm(prev.K[i]), mat_norm(cur.K[i]),
                  prev.frozen_o_norm[i], vec_norm(prev.x[i]), vec_norm(cur.s[i])});
  }

  BetaCoefficients out;
  for (auto& v : out.by_time) v.assign(idx.size(), 0.0);
  for (auto i : idx) out.times.push_back(grid.node(i));

  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a; b < idx.size(); ++b) {
      // Kernels map the later node back to the earlier one: the adjoint
      // transition for the backward sweeps, its transpose (the closed-loop
      // transition) for the forward state.
      const Eigen::MatrixXd back = phi(idx[a], idx[b]);
      const double f = mat_norm(back);
      const double fx = mat_norm(back.transpose());
      // β1..β5: t = t_a, σ = t_b.
      const NodeNorms& sg = nn[b];
      const double b1 = f * sg.s_k;
      const double b2 = f * sg.K_k1 * sg.s_k;
      const double b3 = f * sg.o_km1 * sg.s_k + f * g_norm;
      const double b4 = f * (sg.K_k + sg.K_k1) * f;
      const double b5 = f * sg.K_k * sg.K_k1 * f;
      auto& bt = out.by_time;
      bt[0][a] = std::max(bt[0][a], b1);
      bt[1][a] = std::max(bt[1][a], b2);
      bt[2][a] = std::max(bt[2][a], b3);
      bt[3][a] = std::max(bt[3][a], b4);
      bt[4][a] = std::max(bt[4][a], b5);
      // β6..β9: t = t_b, σ = t_a.
      const NodeNorms& sf = nn[a];
      const double b6 = fx * sf.x_k;
      const double b7 = fx * sf.o_km1 * sf.x_k;
      const double b8 = fx * (sf.K_k1 * sf.x_k + sf.s_k1);
      const double b9 = fx * sf.o_km1 * sf.x_k;
      bt[5][b] = std::max(bt[5][b], b6);
      bt[6][b] = std::max(bt[6][b], b7);
      bt[7][b] = std::max(bt[7][b], b8);
      bt[8][b] = std::max(bt[8][b], b9);
    }
  }
  for (std::size_t r = 0; r < 9; ++r) {
    out.sup[r] = *std::max_element(out.by_time[r].begin(), out.by_time[r].end());
  }
  return out;
}

Eigen::Matrix3d m_matrix(const std::array<double, 9>& beta, const DeltaZeta& dz,
                         const IterateNorms& nrm, double horizon) {
  const double b1 = beta[0], b2 = beta[1], b3 = beta[2], b4 = beta[3], b5 = beta[4];
  const double b6 = beta[5], b7 = beta[6], b8 = beta[7], b9 = beta[8];
  const double delta = dz.delta, zeta = dz.zeta;

  const double d = delta + nrm.x_km1 * zeta;
  const double x_sum = nrm.x_k + nrm.x_km1;
  const double first_col = d * nrm.K_k + zeta * (nrm.K_k * nrm.x_k + nrm.s_k);

  const double row1 = b6 + b4 * b7 + b1 * b9 + b3 * b4 * b9;
  const double row1_o = b8 + b5 * b7 + b2 * b9 + b3 * b5 * b9;
  const double row3 = b1 + b3 * b4;
  const double row3_o = b2 + b3 * b5;

  Eigen::Matrix3d M;
  M(0, 0) = row1 * first_col + zeta * x_sum * row1_o;
  M(0, 1) = row1 * d * nrm.x_km1;
  M(0, 2) = row1 * d;
  M(1, 0) = b4 * first_col + b5 * zeta * x_sum;
  M(1, 1) = b4 * d * nrm.x_km1;
  M(1, 2) = b4 * d;
  M(2, 0) = row3 * first_col + zeta * row3_o * x_sum;
  M(2, 1) = row3 * d * nrm.x_km1;
  M(2, 2) = row3 * d;
  return horizon * M;
}

CriterionResult criterion_check(const Eigen::Matrix3d& M) {
  CriterionResult r;
  r.criterion_sum = M.col(0).cwiseAbs().sum();
  r.satisfied = r.criterion_sum < 1.0;
  r.rho = spectral_radius(M);
  return r;
}

ContractionReport contraction_report(const BilinearProblem& prob, const NFamily& N,
                                     const IterationState& prev, const IterationState& cur,
                                     double x_km1_norm, double alpha, int subsample) {
  const auto betas = beta_coefficients(prob, N, prev, cur, subsample);
  const auto dz = delta_zeta(prob, N);
  const IterateNorms norms{
      .x_k = alpha_norm(prev.x, alpha, WeightDirection::kForward),
      .x_km1 = x_km1_norm,
      .K_k = alpha_norm(prev.K, alpha, WeightDirection::kBackward),
      .s_k = alpha_norm(prev.s, alpha, WeightDirection::kBackward),
  };
  ContractionReport rep;
  rep.k = cur.k;
  rep.betas = betas.sup;
  rep.delta = dz.delta;
  rep.zeta = dz.zeta;
  rep.M = m_matrix(betas.sup, dz, norms, prob.tf());
  const auto crit = criterion_check(rep.M);
  rep.criterion_sum = crit.criterion_sum;
  rep.rho = crit.rho;
  rep.satisfied = crit.satisfied;

  const TimeGrid& grid = prev.x.grid();
  std::vector<Eigen::VectorXd> dx, ds;
  std::vector<Eigen::MatrixXd> dk;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    dx.push_back(cur.x[i] - prev.x[i]);
    ds.push_back(cur.s[i] - prev.s[i]);
    dk.push_back(cur.K[i] - prev.K[i]);
  }
  rep.alpha_diffs << alpha_norm(VectorTrajectory(grid, std::move(dx)), alpha, WeightDirection::kForward),
      alpha_norm(MatrixTrajectory(grid, std::move(dk)), alpha, WeightDirection::kBackward),
      alpha_norm(VectorTrajectory(grid, std::move(ds)), alpha, WeightDirection::kBackward);
  return rep;
}

std::optional<int> ConvergenceReport::crossover_iteration() const {
  for (const auto& s : steps) {
    if (s.satisfied) return s.k;
  }
  return std::nullopt;
}

HjbResidual hjb_residual(const BilinearProblem& prob, const NFamily& N,
                         const IterationState& final) {
  const TimeGrid& grid = final.x.grid();
  const Eigen::VectorXd& g = prob.g();
  std::vector<double> res;
  res.reserve(grid.size());
  HjbResidual out{.residual = ScalarTrajectory::constant(grid, 0.0)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd& x = final.x[i];
    const Eigen::VectorXd& p = final.p[i];
    const Eigen::VectorXd& u = final.u[i];
    const Eigen::MatrixXd& K = final.K[i];
    const Eigen::VectorXd& s = final.s[i];
    const Eigen::MatrixXd at = a_tilde(prob, N, x, p);
    const Eigen::MatrixXd ot = o_tilde(prob, N, x);

    const Eigen::MatrixXd KA = K * at;
    const Eigen::MatrixXd k_dot = -KA - KA.transpose() + K * ot * K;
    const Eigen::VectorXd s_dot = -(at.transpose() - K * ot) * s - K * g;
    const double q_dot = s.dot(ot * s) - 2.0 * s.dot(g);
    const double v_t = 0.5 * x.dot(k_dot * x) + x.dot(s_dot) + 0.5 * q_dot;
    const double flow = p.dot(bilinear_rhs(prob, x, u));
    const double energy = 0.5 * u.dot(prob.R() * u);

    const double r = v_t + flow + energy;
    res.push_back(r);
    out.sup_abs = std::max(out.sup_abs, std::abs(r));
    out.term_scale = std::max(out.term_scale, std::abs(v_t) + std::abs(flow) + std::abs(energy));
  }
  out.residual = ScalarTrajectory(grid, std::move(res));
  return out;
}

NecessaryConditionResidual necessary_condition_residual(const BilinearProblem& prob,
                                                        const NFamily& N,
                                                        const IterationState& final) {
  const TimeGrid& grid = final.x.grid();
  const double h = grid.step();
  const std::size_t last = grid.size() - 1;
  auto derivative = [&](const VectorTrajectory& y, std::size_t i) -> Eigen::VectorXd {
    if (i == 0) return (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
    if (i == last) return (3.0 * y[last] - 4.0 * y[last - 1] + y[last - 2]) / (2.0 * h);
    return (y[i + 1] - y[i - 1]) / (2.0 * h);
  };
  NecessaryConditionResidual out;
  for (std::size_t i = 0; i <= last; ++i) {
    const Eigen::VectorXd& x = final.x[i];
    const Eigen::VectorXd& p = final.p[i];
    const Eigen::MatrixXd at = a_tilde(prob, N, x, p);
    const Eigen::VectorXd state_rhs = at * x - o_tilde(prob, N, x) * p + prob.g();
    const Eigen::VectorXd costate_rhs = -at.transpose() * p;
    out.state_sup = std::max(out.state_sup, vec_norm(derivative(final.x, i) - state_rhs));
    out.costate_sup = std::max(out.costate_sup, vec_norm(derivative(final.p, i) - costate_rhs));
    out.state_scale = std::max(out.state_scale, vec_norm(state_rhs));
    out.costate_scale = std::max(out.costate_scale, vec_norm(costate_rhs));
  }
  return out;
}

}  // namespace bilens
