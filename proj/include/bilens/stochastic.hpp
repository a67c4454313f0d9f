#pragma once

// Additive-noise bilinear systems: the deterministic expected-value problem
// and seeded Monte Carlo path simulation for checking it.
//
// With additive noise and a deterministic control the mean obeys the reduced
// ODE exactly, so the Monte Carlo comparison is a correctness test rather
// than an approximation study.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bilens/model.hpp"
#include "bilens/numkit.hpp"

namespace bilens {

enum class NoiseKind { kPoisson, kWiener };

std::string to_string(NoiseKind kind);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kPoisson;
  Eigen::MatrixXd G;       ///< n x k
  Eigen::VectorXd lambda;  ///< k jump rates (Poisson only)

  Eigen::Index dim() const { return G.cols(); }
  void validate(Eigen::Index n) const;
};

/// Noise for q independent copies: G block-diagonal, rates repeated.
NoiseSpec stack_noise(const NoiseSpec& member, int q);

/// Deterministic problem for the mean: adds G λ to g (Poisson); Wiener noise
/// has zero mean and leaves g unchanged.
BilinearProblem expected_reduction(const BilinearProblem& prob, const NoiseSpec& noise);

/// Philox4x32-10 counter-based generator. The key is the 64-bit seed, the
/// upper counter words select an independent stream, the lower words count
/// draws.
class Philox4x32 {
 public:
  Philox4x32(std::uint64_t seed, std::uint32_t stream_hi, std::uint32_t stream_lo);

  std::array<std::uint32_t, 4> block();
  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double exponential(double rate);
  double normal();

  static std::array<std::uint32_t, 4> bijection(std::array<std::uint32_t, 4> ctr,
                                                std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  std::optional<double> spare_normal_;
};

struct PathBatch {
  int paths = 0;
  std::uint64_t seed = 0;
  VectorTrajectory mean;
  /// Standard error of the node-wise mean.
  VectorTrajectory std_error;
  std::vector<Eigen::VectorXd> terminal;
  /// Number of jumps per path (zero for Wiener batches).
  std::vector<long> jump_counts;
  /// Full paths, only when requested.
  std::vector<VectorTrajectory> samples;
};

struct PathOptions {
  int paths = 1;
  std::uint64_t seed = 0;
  /// Independent stream selector, e.g. the ensemble member index.
  std::uint32_t stream = 0;
  bool keep_paths = false;
};

/// RK4 between jumps, steps split at exact exponential jump times; a jump of
/// counter j adds column j of G.
PathBatch simulate_poisson_paths(const BilinearProblem& prob, const NoiseSpec& noise,
                                 const VectorTrajectory& u, const PathOptions& opts);

/// RK4 drift step followed by G sqrt(h) xi per grid step.
PathBatch simulate_wiener_paths(const BilinearProblem& prob, const NoiseSpec& noise,
                                const VectorTrajectory& u, const PathOptions& opts);

struct MeanComparison {
  double max_standardized = 0.0;
  std::size_t worst_node = 0;
  Eigen::Index worst_component = 0;
};

/// max over nodes and components of |mean - reference| / stderr. Entries with
/// zero stderr count only when the mean differs from the reference.
MeanComparison mc_mean_compare(const PathBatch& batch, const VectorTrajectory& reference);

}  // namespace bilens
