#include "bilens/ensemble.hpp"

#include <cmath>
#include <string>

namespace bilens {

void EnsembleSpec::validate() const {
  if (q < 1) throw InvalidArgument("ensemble sample count q must be at least 1");
  if (box.lower.size() == 0 || box.lower.size() != box.upper.size()) {
    throw InvalidArgument("parameter box bounds must be non-empty and of equal dimension");
  }
  for (Eigen::Index i = 0; i < box.lower.size(); ++i) {
    if (!std::isfinite(box.lower(i)) || !std::isfinite(box.upper(i)) ||
        box.lower(i) > box.upper(i)) {
      throw InvalidArgument("parameter box axis " + std::to_string(i) + " is not a valid interval");
    }
  }
  if (!coeffs) throw InvalidArgument("ensemble has no coefficient map");
  if (base_n < 1 || base_m < 1) throw InvalidArgument("ensemble base dimensions must be positive");
  if (R.rows() != base_m || R.cols() != base_m) throw InvalidArgument("R must be base_m x base_m");
}

namespace {

std::vector<double> axis_points(double a, double b, int count) {
  if (count == 1) return {0.5 * (a + b)};
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    out[i] = (i + 1 == count) ? b : a + (b - a) * i / (count - 1);
  }
  return out;
}

void check_member(const SampleSystem& s, Eigen::Index n, Eigen::Index m, int j) {
  const std::string who = "sample " + std::to_string(j) + ": ";
  if (s.A.rows() != n || s.A.cols() != n) throw InvalidArgument(who + "A has wrong shape");
  if (s.B.rows() != n || s.B.cols() != m) throw InvalidArgument(who + "B has wrong shape");
  if (static_cast<Eigen::Index>(s.bilinear.size()) != m) {
    throw InvalidArgument(who + "expected one bilinear matrix per control");
  }
  for (const auto& Bi : s.bilinear) {
    if (Bi.rows() != n || Bi.cols() != n) throw InvalidArgument(who + "bilinear matrix has wrong shape");
  }
  if (s.g.size() != n || s.x0.size() != n || s.xd.size() != n) {
    throw InvalidArgument(who + "g, x0 and xd must have length base_n");
  }
}

}  // namespace

std::vector<Eigen::VectorXd> sample_uniform(const EnsembleSpec& spec) {
  spec.validate();
  const int d = spec.box.dim();
  std::vector<int> counts(d, 1);
  if (d == 1) {
    counts[0] = spec.q;
  } else {
    const int base = std::max(1, static_cast<int>(std::floor(std::pow(spec.q, 1.0 / d) + 1e-9)));
    std::fill(counts.begin(), counts.end(), base);
    long prod = 1;
    for (int c : counts) prod *= c;
    for (int a = 0; a < d; ++a) {
      if (prod / counts[a] * (counts[a] + 1) > spec.q) break;
      prod = prod / counts[a] * (counts[a] + 1);
      ++counts[a];
    }
  }
  std::vector<std::vector<double>> axes;
  for (int a = 0; a < d; ++a) axes.push_back(axis_points(spec.box.lower(a), spec.box.upper(a), counts[a]));

  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(d, 0);
  while (true) {
    Eigen::VectorXd beta(d);
    for (int a = 0; a < d; ++a) beta(a) = axes[a][idx[a]];
    out.push_back(beta);
    int a = d - 1;
    while (a >= 0 && ++idx[a] == counts[a]) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

BilinearProblem stack_problem(const EnsembleSpec& spec, const std::vector<Eigen::VectorXd>& samples) {
  spec.validate();
  if (samples.empty()) throw InvalidArgument("no ensemble samples");
  const Eigen::Index bn = spec.base_n, m = spec.base_m;
  const int q = static_cast<int>(samples.size());
  const Eigen::Index n = bn * q;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B(n, m);
  std::vector<Eigen::MatrixXd> bil(m, Eigen::MatrixXd::Zero(n, n));
  Eigen::VectorXd g(n), x0(n), xd(n);
  for (int j = 0; j < q; ++j) {
    const SampleSystem s = spec.coeffs(samples[j]);
    check_member(s, bn, m, j);
    const Eigen::Index o = j * bn;
    A.block(o, o, bn, bn) = s.A;
    B.middleRows(o, bn) = s.B;
    for (Eigen::Index i = 0; i < m; ++i) bil[i].block(o, o, bn, bn) = s.bilinear[i];
    g.segment(o, bn) = s.g;
    x0.segment(o, bn) = s.x0;
    xd.segment(o, bn) = s.xd;
  }
  return BilinearProblem(std::move(A), std::move(B), std::move(bil), std::move(g), std::move(x0),
                         std::move(xd), spec.tf, spec.R, 1.0 / q);
}

Eigen::VectorXd member_block(const Eigen::VectorXd& stacked, Eigen::Index base_n, int j) {
  if ((j + 1) * base_n > stacked.size()) throw InvalidArgument("member index out of range");
  return stacked.segment(j * base_n, base_n);
}

double terminal_cost_riemann(const EnsembleSpec& spec, const std::vector<Eigen::VectorXd>& samples,
                             const Eigen::VectorXd& x_tf) {
  const int q = static_cast<int>(samples.size());
  if (x_tf.size() != spec.base_n * q) throw InvalidArgument("stacked terminal state has wrong length");
  double sum = 0.0;
  for (int j = 0; j < q; ++j) {
    const SampleSystem s = spec.coeffs(samples[j]);
    sum += (member_block(x_tf, spec.base_n, j) - s.xd).squaredNorm();
  }
  return sum / q;
}

std::vector<RefinementRow> refinement_study(EnsembleSpec spec, const std::vector<int>& q_sequence,
                                            const SolveOptions& opts) {
  std::vector<RefinementRow> rows;
  for (int q : q_sequence) {
    spec.q = q;
    const auto samples = sample_uniform(spec);
    const BilinearProblem prob = stack_problem(spec, samples);
    const SolveResult res = solve(prob, opts);
    rows.push_back({.q = q,
                    .terminal_cost = terminal_cost_riemann(spec, samples, res.final.x.back()),
                    .cost = res.final.cost,
                    .iterations = res.iterations_used,
                    .converged = res.converged});
  }
  return rows;
}

}  // namespace bilens
