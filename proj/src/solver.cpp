#include "bilens/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bilens {

std::string to_string(StopRule rule) {
  switch (rule) {
    case StopRule::kIterateDiff:
      return "diff";
    case StopRule::kTargetDistance:
      return "target";
    case StopRule::kBoth:
      return "both";
  }
  return "diff";
}

StopRule parse_stop_rule(const std::string& name) {
  if (name == "diff") return StopRule::kIterateDiff;
  if (name == "target") return StopRule::kTargetDistance;
  if (name == "both") return StopRule::kBoth;
  throw InvalidArgument("unknown stop rule '" + name + "' (expected diff, target or both)");
}

void SolveOptions::validate() const {
  if (steps < 2) throw InvalidArgument("grid steps must be at least 2");
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be non-negative");
  if (beta_subsample < 1) throw InvalidArgument("beta subsample factor must be positive");
}

FrozenCoefficients freeze(const BilinearProblem& prob, const NFamily& N,
                          const IterationState& state) {
  const auto& grid = state.x.grid();
  std::vector<Eigen::MatrixXd> at, ot;
  at.reserve(grid.size());
  ot.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    at.push_back(a_tilde(prob, N, state.x[i], state.p[i]));
    ot.push_back(o_tilde(prob, N, state.x[i]));
  }
  return {MatrixTrajectory(grid, std::move(at)), MatrixTrajectory(grid, std::move(ot))};
}

MatrixTrajectory riccati_sweep(const MatrixFn& a_field, const MatrixFn& o_field,
                               const Eigen::MatrixXd& K_T, const TimeGrid& grid) {
  const Field<Eigen::MatrixXd> rhs = [&](double t, const Eigen::MatrixXd& K) {
    const Eigen::MatrixXd o = o_field(t);
    Eigen::MatrixXd KA = K * a_field(t);
    Eigen::MatrixXd out = K * o * K;
    out -= KA;
    out -= KA.transpose();
    return out;
  };
  const StepHook<Eigen::MatrixXd> symmetrize = [](Eigen::MatrixXd& K) {
    K = 0.5 * (K + K.transpose()).eval();
  };
  try {
    return integrate_backward<Eigen::MatrixXd>(rhs, K_T, grid, symmetrize);
  } catch (const NumericalBlowUp& e) {
    std::ostringstream msg;
    msg << "Riccati escape at t=" << e.time() << "; try increasing R";
    throw RiccatiEscape(e.node(), e.time(), msg.str());
  }
}

VectorTrajectory s_sweep(const MatrixFn& a_field, const MatrixFn& o_field,
                         const MatrixTrajectory& K, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& s_T, const TimeGrid& grid) {
  const Field<Eigen::VectorXd> rhs = [&](double t, const Eigen::VectorXd& s) {
    const Eigen::MatrixXd k = K.at(t);
    Eigen::VectorXd out = k * (o_field(t) * s - g);
    out.noalias() -= a_field(t).transpose() * s;
    return out;
  };
  return integrate_backward<Eigen::VectorXd>(rhs, s_T, grid);
}

ScalarTrajectory q_sweep(const MatrixFn& o_field, const VectorTrajectory& s,
                         const Eigen::VectorXd& g, const TimeGrid& grid, double q_T) {
  const Field<double> rhs = [&](double t, const double&) {
    const Eigen::VectorXd st = s.at(t);
    return st.dot(o_field(t) * st) - 2.0 * st.dot(g);
  };
  return integrate_backward<double>(rhs, q_T, grid);
}

VectorTrajectory forward_state(const MatrixFn& a_field, const MatrixFn& o_field,
                               const MatrixTrajectory& K, const VectorTrajectory& s,
                               const Eigen::VectorXd& g, const Eigen::VectorXd& x0,
                               const TimeGrid& grid) {
  const Field<Eigen::VectorXd> rhs = [&](double t, const Eigen::VectorXd& x) {
    const Eigen::VectorXd p = K.at(t) * x + s.at(t);
    Eigen::VectorXd out = a_field(t) * x + g;
    out.noalias() -= o_field(t) * p;
    return out;
  };
  return integrate_forward<Eigen::VectorXd>(rhs, x0, grid);
}

VectorTrajectory control_reconstruct(const BilinearProblem& prob, const NFamily& N,
                                     const VectorTrajectory& x, const VectorTrajectory& p) {
  std::vector<Eigen::VectorXd> u;
  u.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::MatrixXd lambda = lambda_of(prob, N, x[i]);
    u.push_back(-prob.R_inv() * (lambda.transpose() * p[i]));
  }
  return VectorTrajectory(x.grid(), std::move(u));
}

namespace {

ScalarTrajectory norm_series(const MatrixTrajectory& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& v : m.values()) out.push_back(mat_norm(v));
  return ScalarTrajectory(m.grid(), std::move(out));
}

double sup_diff(const VectorTrajectory& a, const VectorTrajectory& b) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, vec_norm(a[i] - b[i]));
  return best;
}

}  // namespace

IterationState initial_iterate(const BilinearProblem& prob, const NFamily& N,
                               const TimeGrid& grid,
                               const std::function<Eigen::VectorXd(double)>& seed) {
  const Eigen::Index n = prob.n();
  std::vector<Eigen::VectorXd> u0;
  u0.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    u0.push_back(seed ? seed(grid.node(i)) : Eigen::VectorXd::Zero(prob.m()));
    if (u0.back().size() != prob.m()) throw InvalidArgument("seed control has wrong dimension");
  }
  VectorTrajectory u(grid, std::move(u0));
  auto x = resimulate_bilinear(prob, u);
  std::vector<double> onorm;
  onorm.reserve(grid.size());
  for (const auto& xi : x.values()) onorm.push_back(mat_norm(o_tilde(prob, N, xi)));
  IterationState st{
      .k = 0,
      .x = x,
      .p = VectorTrajectory::constant(grid, Eigen::VectorXd::Zero(n)),
      .u = u,
      .K = MatrixTrajectory::constant(grid, Eigen::MatrixXd::Zero(n, n)),
      .s = VectorTrajectory::constant(grid, Eigen::VectorXd::Zero(n)),
      .q = ScalarTrajectory::constant(grid, 0.0),
      .cost = 0.0,
      .diff_x = std::numeric_limits<double>::infinity(),
      .frozen_o_norm = ScalarTrajectory(grid, std::move(onorm)),
  };
  st.cost = evaluate_cost(prob, st.u, x.back());
  return st;
}

IterationState iterate_once(const BilinearProblem& prob, const NFamily& N,
                            const IterationState& prev, const TimeGrid& grid) {
  if (!(prev.x.grid() == grid)) throw InvalidArgument("iterate grid mismatch");
  const FrozenCoefficients frozen = freeze(prob, N, prev);
  const MatrixFn a_field = [&frozen](double t) { return frozen.a_tilde.at(t); };
  const MatrixFn o_field = [&frozen](double t) { return frozen.o_tilde.at(t); };

  const Eigen::Index n = prob.n();
  const double w = prob.terminal_weight();
  auto K = riccati_sweep(a_field, o_field, 2.0 * w * Eigen::MatrixXd::Identity(n, n), grid);
  auto s = s_sweep(a_field, o_field, K, prob.g(), -2.0 * w * prob.xd(), grid);
  auto q = q_sweep(o_field, s, prob.g(), grid);
  auto x = forward_state(a_field, o_field, K, s, prob.g(), prob.x0(), grid);

  std::vector<Eigen::VectorXd> p;
  p.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) p.push_back(K[i] * x[i] + s[i]);
  VectorTrajectory pt(grid, std::move(p));
  auto u = control_reconstruct(prob, N, x, pt);

  const double cost = evaluate_cost(prob, u, x.back());
  const double diff = sup_diff(x, prev.x);
  return IterationState{
      .k = prev.k + 1,
      .x = std::move(x),
      .p = std::move(pt),
      .u = std::move(u),
      .K = std::move(K),
      .s = std::move(s),
      .q = std::move(q),
      .cost = cost,
      .diff_x = diff,
      .frozen_o_norm = norm_series(frozen.o_tilde),
  };
}

double terminal_distance(const BilinearProblem& prob, const Eigen::VectorXd& x_tf) {
  return (x_tf - prob.xd()).norm();
}

namespace {

bool stop_condition(StopRule rule, double tol, const IterationState& st,
                    const BilinearProblem& prob) {
  const bool diff_ok = st.diff_x < tol;
  const bool target_ok = terminal_distance(prob, st.x.back()) <= tol;
  switch (rule) {
    case StopRule::kIterateDiff:
      return diff_ok;
    case StopRule::kTargetDistance:
      return target_ok;
    case StopRule::kBoth:
      return diff_ok && target_ok;
  }
  return false;
}

}  // namespace

SolveResult solve(const BilinearProblem& prob, const SolveOptions& opts) {
  opts.validate();
  const TimeGrid grid(0.0, prob.tf(), opts.steps);
  const NFamily N = assemble_N(prob.bilinear());

  IterationState prev = initial_iterate(prob, N, grid, opts.initial_control);
  double x_km1_norm = alpha_norm(prev.x, opts.alpha, WeightDirection::kForward);

  SolveResult result{.final = prev};
  if (opts.record_diagnostics) result.diagnostics = ConvergenceReport{};

  for (int k = 1; k <= opts.max_iters; ++k) {
    IterationState cur = [&] {
      try {
        return iterate_once(prob, N, prev, grid);
      } catch (const NumericalBlowUp& e) {
        const std::string msg = "iteration " + std::to_string(k) + ": " + e.what();
        if (dynamic_cast<const RiccatiEscape*>(&e) != nullptr) {
          throw RiccatiEscape(e.node(), e.time(), msg);
        }
        throw NumericalBlowUp(e.node(), e.time(), msg + "; try increasing R");
      }
    }();
    if (!std::isfinite(cur.diff_x)) {
      throw NumericalBlowUp(0, 0.0,
                            "iteration " + std::to_string(k) +
                                ": iterate diverged to non-finite values; try increasing R");
    }
    result.history.push_back({.k = k,
                              .diff_x = cur.diff_x,
                              .cost = cur.cost,
                              .terminal_distance = terminal_distance(prob, cur.x.back())});
    if (result.diagnostics) {
      result.diagnostics->steps.push_back(
          contraction_report(prob, N, prev, cur, x_km1_norm, opts.alpha, opts.beta_subsample));
    }
    result.iterations_used = k;
    const bool done = stop_condition(opts.stop_rule, opts.tol, cur, prob);
    x_km1_norm = alpha_norm(prev.x, opts.alpha, WeightDirection::kForward);
    prev = std::move(cur);
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.final = std::move(prev);
  return result;
}

double evaluate_cost(const BilinearProblem& prob, const VectorTrajectory& u,
                     const Eigen::VectorXd& x_tf) {
  const double h = u.grid().step();
  double energy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double e = u[i].dot(prob.R() * u[i]);
    energy += (i == 0 || i + 1 == u.size()) ? 0.5 * e : e;
  }
  energy *= 0.5 * h;
  return energy + prob.terminal_weight() * (x_tf - prob.xd()).squaredNorm();
}

double frozen_problem_cost(const BilinearProblem& prob, const MatrixTrajectory& o_tilde,
                           const IterationState& state) {
  const double h = state.p.grid().step();
  double energy = 0.0;
  for (std::size_t i = 0; i < state.p.size(); ++i) {
    const double e = state.p[i].dot(o_tilde[i] * state.p[i]);
    energy += (i == 0 || i + 1 == state.p.size()) ? 0.5 * e : e;
  }
  energy *= 0.5 * h;
  return energy + prob.terminal_weight() * (state.x.back() - prob.xd()).squaredNorm();
}

double value_function(const IterationState& state, std::size_t node, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(state.K[node] * x) + x.dot(state.s[node]) + 0.5 * state.q[node];
}

double value_offset(const BilinearProblem& prob) {
  return prob.terminal_weight() * prob.xd().squaredNorm();
}

VectorTrajectory resimulate_bilinear(const BilinearProblem& prob, const VectorTrajectory& u) {
  if (u.front().size() != prob.m()) throw InvalidArgument("control has wrong dimension");
  const Field<Eigen::VectorXd> rhs = [&](double t, const Eigen::VectorXd& x) {
    return bilinear_rhs(prob, x, u.at(t));
  };
  return integrate_forward<Eigen::VectorXd>(rhs, prob.x0(), u.grid());
}

}  // namespace bilens
