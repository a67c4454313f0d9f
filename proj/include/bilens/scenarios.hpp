#pragma once

// Built-in problems: an integrate-and-fire neuron population (two parameter
// cases), a broadband Bloch ensemble and a relaxation-limited two-spin
// coherence transfer.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bilens/ensemble.hpp"
#include "bilens/solver.hpp"
#include "bilens/stochastic.hpp"

namespace bilens {

/// Stable identifiers accepted by the CLI.
const std::vector<std::string>& scenario_names();

/// A scenario name plus named overrides. Recognised names: q, steps,
/// r_scale, tol, max_iters.
struct ScenarioId {
  std::string name;
  std::map<std::string, double> overrides;
};

struct Scenario {
  std::string name;
  EnsembleSpec spec;
  SolveOptions opts;
  /// Per-member additive noise; members receive independent copies.
  std::optional<NoiseSpec> noise;
  /// Discrepancies between the source description and what is built.
  std::vector<std::string> notes;
  /// Replaces the 1/q weight of the stacked problem when set.
  std::optional<double> terminal_weight;

  std::vector<Eigen::VectorXd> samples() const { return sample_uniform(spec); }
  /// Stacked problem; with noise, its expected-value reduction.
  BilinearProblem problem() const;
  /// Single member (terminal weight 1, noise not reduced).
  BilinearProblem member_problem(const Eigen::VectorXd& beta) const;
};

/// Throws InvalidArgument for an unknown name or override.
Scenario build(const ScenarioId& id);

/// Coordinate (0-based) whose maximum is the two-spin transfer figure.
inline constexpr Eigen::Index kTransferCoordinate = 5;

struct ScenarioMetrics {
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> series;
};

/// IAF: terminal mean across members. Bloch: final x-component per member.
/// Two-spin: max over nodes of the transfer coordinate.
ScenarioMetrics report_metrics(const Scenario& sc, const SolveResult& result);

}  // namespace bilens
