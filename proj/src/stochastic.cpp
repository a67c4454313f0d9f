#include "bilens/stochastic.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bilens {

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::kPoisson ? "poisson" : "wiener";
}

void NoiseSpec::validate(Eigen::Index n) const {
  if (G.rows() != n) throw InvalidArgument("noise matrix G must have n rows");
  if (!G.allFinite()) throw InvalidArgument("noise matrix G must be finite");
  if (kind == NoiseKind::kPoisson) {
    if (lambda.size() != G.cols()) throw InvalidArgument("need one jump rate per noise channel");
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      if (!(lambda(j) > 0.0) || !std::isfinite(lambda(j))) {
        throw InvalidArgument("Poisson rates must be finite and positive");
      }
    }
  }
}

NoiseSpec stack_noise(const NoiseSpec& member, int q) {
  if (q < 1) throw InvalidArgument("q must be at least 1");
  const Eigen::Index n = member.G.rows(), k = member.G.cols();
  NoiseSpec out{member.kind, Eigen::MatrixXd::Zero(n * q, k * q), Eigen::VectorXd()};
  if (member.kind == NoiseKind::kPoisson) out.lambda = member.lambda.replicate(q, 1);
  for (int j = 0; j < q; ++j) out.G.block(j * n, j * k, n, k) = member.G;
  return out;
}

BilinearProblem expected_reduction(const BilinearProblem& prob, const NoiseSpec& noise) {
  noise.validate(prob.n());
  if (noise.kind == NoiseKind::kWiener) return prob;
  return prob.with_g(prob.g() + noise.G * noise.lambda);
}

// --- Philox4x32-10 -------------------------------------------------------------

namespace {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
}  // namespace

std::array<std::uint32_t, 4> Philox4x32::bijection(std::array<std::uint32_t, 4> c,
                                                   std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

Philox4x32::Philox4x32(std::uint64_t seed, std::uint32_t stream_hi, std::uint32_t stream_lo)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, 0u, stream_lo, stream_hi} {}

std::array<std::uint32_t, 4> Philox4x32::block() {
  const auto out = bijection(ctr_, key_);
  if (++ctr_[0] == 0) ++ctr_[1];
  return out;
}

std::uint32_t Philox4x32::next_u32() {
  if (used_ == 4) {
    buf_ = block();
    used_ = 0;
  }
  return buf_[used_++];
}

double Philox4x32::uniform() {
  const std::uint64_t hi = next_u32() >> 5;  // 27 bits
  const std::uint64_t lo = next_u32() >> 6;  // 26 bits
  const double r = static_cast<double>((hi << 26) | lo);
  return (r + 0.5) * 0x1.0p-53;
}

double Philox4x32::exponential(double rate) { return -std::log(uniform()) / rate; }

double Philox4x32::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

// --- path simulation -------------------------------------------------------------

namespace {

// In-place RK4 for the bilinear drift with preallocated buffers.
class DriftStepper {
 public:
  explicit DriftStepper(const BilinearProblem& prob)
      : prob_(prob), k1_(prob.n()), k2_(prob.n()), k3_(prob.n()), k4_(prob.n()), tmp_(prob.n()) {}

  void step(Eigen::VectorXd& x, double h, const Eigen::VectorXd& u0, const Eigen::VectorXd& um,
            const Eigen::VectorXd& u1) {
    rhs(x, u0, k1_);
    tmp_ = x + 0.5 * h * k1_;
    rhs(tmp_, um, k2_);
    tmp_ = x + 0.5 * h * k2_;
    rhs(tmp_, um, k3_);
    tmp_ = x + h * k3_;
    rhs(tmp_, u1, k4_);
    x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
    // Coefficient-wise products: the systems are small and the general
    // product kernels dominate the cost at this size.
    out = prob_.g();
    out.noalias() += prob_.A().lazyProduct(x);
    out.noalias() += prob_.B().lazyProduct(u);
    for (Eigen::Index i = 0; i < u.size(); ++i) out.noalias() += u(i) * prob_.bilinear()[i].lazyProduct(x);
  }

  const BilinearProblem& prob_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_;
};

class Accumulator {
 public:
  Accumulator(std::size_t nodes, Eigen::Index n)
      : mean_(nodes, Eigen::VectorXd::Zero(n)), m2_(nodes, Eigen::VectorXd::Zero(n)) {}

  void add(std::size_t node, const Eigen::VectorXd& x) {
    if (node == 0) ++count_;
    const double c = static_cast<double>(count_);
    Eigen::VectorXd& mean = mean_[node];
    Eigen::VectorXd& m2 = m2_[node];
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double delta = x(j) - mean(j);
      mean(j) += delta / c;
      m2(j) += delta * (x(j) - mean(j));
    }
  }

  void finish(const TimeGrid& grid, PathBatch& out) const {
    std::vector<Eigen::VectorXd> se;
    se.reserve(m2_.size());
    for (const auto& m2 : m2_) {
      if (count_ < 2) {
        se.push_back(Eigen::VectorXd::Zero(m2.size()));
      } else {
        const double c = static_cast<double>(count_);
        se.push_back((m2.array().max(0.0) / (c - 1.0) / c).sqrt().matrix());
      }
    }
    out.mean = VectorTrajectory(grid, mean_);
    out.std_error = VectorTrajectory(grid, std::move(se));
  }

 private:
  long count_ = 0;
  std::vector<Eigen::VectorXd> mean_;
  std::vector<Eigen::VectorXd> m2_;
};

void check_inputs(const BilinearProblem& prob, const NoiseSpec& noise, const VectorTrajectory& u,
                  const PathOptions& opts) {
  noise.validate(prob.n());
  if (opts.paths < 1) throw InvalidArgument("path count must be at least 1");
  if (u.front().size() != prob.m()) throw InvalidArgument("control has wrong dimension");
}

std::vector<Eigen::VectorXd> midpoints(const VectorTrajectory& u) {
  std::vector<Eigen::VectorXd> mid;
  mid.reserve(u.size());
  for (std::size_t i = 0; i + 1 < u.size(); ++i) mid.push_back(0.5 * (u[i] + u[i + 1]));
  return mid;
}

void ensure_finite(const Eigen::VectorXd& x, int path, std::size_t node, double t) {
  if (!x.allFinite()) {
    throw NumericalBlowUp(node, t, "path " + std::to_string(path) + " blew up at t=" + std::to_string(t));
  }
}

}  // namespace

PathBatch simulate_poisson_paths(const BilinearProblem& prob, const NoiseSpec& noise,
                                 const VectorTrajectory& u, const PathOptions& opts) {
  if (noise.kind != NoiseKind::kPoisson) throw InvalidArgument("expected Poisson noise");
  check_inputs(prob, noise, u, opts);
  const TimeGrid& grid = u.grid();
  const std::size_t nodes = grid.size();
  const double h = grid.step();
  const auto mid = midpoints(u);
  const Eigen::Index k = noise.dim();

  const auto zeros = VectorTrajectory::constant(grid, Eigen::VectorXd::Zero(prob.n()));
  PathBatch out{.paths = opts.paths, .seed = opts.seed, .mean = zeros, .std_error = zeros};
  Accumulator acc(nodes, prob.n());
  DriftStepper stepper(prob);
  Eigen::VectorXd x(prob.n());
  std::vector<double> next_jump(static_cast<std::size_t>(k));

  for (int path = 0; path < opts.paths; ++path) {
    Philox4x32 rng(opts.seed, opts.stream, static_cast<std::uint32_t>(path));
    for (Eigen::Index j = 0; j < k; ++j) next_jump[j] = grid.t0() + rng.exponential(noise.lambda(j));
    long jumps = 0;
    x = prob.x0();
    std::vector<Eigen::VectorXd> kept;
    if (opts.keep_paths) kept.push_back(x);
    acc.add(0, x);
    for (std::size_t i = 0; i + 1 < nodes; ++i) {
      const double t0 = grid.node(i), t1 = grid.node(i + 1);
      double t = t0;
      while (true) {
        Eigen::Index which = -1;
        double tj = t1;
        for (Eigen::Index j = 0; j < k; ++j) {
          if (next_jump[j] < tj) {
            tj = next_jump[j];
            which = j;
          }
        }
        if (which < 0) break;
        if (tj > t) {
          const Eigen::VectorXd ua = u.at(t), ub = u.at(tj), um = u.at(0.5 * (t + tj));
          stepper.step(x, tj - t, ua, um, ub);
          t = tj;
        }
        x += noise.G.col(which);
        ++jumps;
        next_jump[which] += rng.exponential(noise.lambda(which));
      }
      if (t == t0) {
        stepper.step(x, h, u[i], mid[i], u[i + 1]);
      } else if (t1 > t) {
        const Eigen::VectorXd ua = u.at(t), um = u.at(0.5 * (t + t1));
        stepper.step(x, t1 - t, ua, um, u[i + 1]);
      }
      ensure_finite(x, path, i + 1, t1);
      acc.add(i + 1, x);
      if (opts.keep_paths) kept.push_back(x);
    }
    out.terminal.push_back(x);
    out.jump_counts.push_back(jumps);
    if (opts.keep_paths) out.samples.emplace_back(grid, std::move(kept));
  }
  acc.finish(grid, out);
  return out;
}

PathBatch simulate_wiener_paths(const BilinearProblem& prob, const NoiseSpec& noise,
                                const VectorTrajectory& u, const PathOptions& opts) {
  if (noise.kind != NoiseKind::kWiener) throw InvalidArgument("expected Wiener noise");
  check_inputs(prob, noise, u, opts);
  const TimeGrid& grid = u.grid();
  const std::size_t nodes = grid.size();
  const double h = grid.step();
  const double sqrt_h = std::sqrt(h);
  const auto mid = midpoints(u);

  const auto zeros = VectorTrajectory::constant(grid, Eigen::VectorXd::Zero(prob.n()));
  PathBatch out{.paths = opts.paths, .seed = opts.seed, .mean = zeros, .std_error = zeros};
  Accumulator acc(nodes, prob.n());
  DriftStepper stepper(prob);
  Eigen::VectorXd x(prob.n()), xi(noise.dim());

  for (int path = 0; path < opts.paths; ++path) {
    Philox4x32 rng(opts.seed, opts.stream, static_cast<std::uint32_t>(path));
    x = prob.x0();
    std::vector<Eigen::VectorXd> kept;
    if (opts.keep_paths) kept.push_back(x);
    acc.add(0, x);
    for (std::size_t i = 0; i + 1 < nodes; ++i) {
      stepper.step(x, h, u[i], mid[i], u[i + 1]);
      for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = rng.normal();
      x.noalias() += sqrt_h * (noise.G * xi);
      ensure_finite(x, path, i + 1, grid.node(i + 1));
      acc.add(i + 1, x);
      if (opts.keep_paths) kept.push_back(x);
    }
    out.terminal.push_back(x);
    out.jump_counts.push_back(0);
    if (opts.keep_paths) out.samples.emplace_back(grid, std::move(kept));
  }
  acc.finish(grid, out);
  return out;
}

MeanComparison mc_mean_compare(const PathBatch& batch, const VectorTrajectory& reference) {
  if (!(batch.mean.grid() == reference.grid())) throw InvalidArgument("reference grid mismatch");
  MeanComparison out;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i].size() != batch.mean[i].size()) throw InvalidArgument("reference dimension mismatch");
    for (Eigen::Index c = 0; c < reference[i].size(); ++c) {
      const double diff = std::abs(batch.mean[i](c) - reference[i](c));
      const double se = batch.std_error[i](c);
      double z = 0.0;
      if (se > 0.0) {
        z = diff / se;
      } else if (diff > 1e-12 * (1.0 + std::abs(reference[i](c)))) {
        z = std::numeric_limits<double>::infinity();
      }
      if (z > out.max_standardized) {
        out.max_standardized = z;
        out.worst_node = i;
        out.worst_component = c;
      }
    }
  }
  return out;
}

}  // namespace bilens
