#include <CLI11.hpp>
#include <iostream>

#include "bilens/cli_commands.hpp"

namespace {

void add_common(CLI::App* cmd, bilens::RunConfig& c, std::string& stop_rule) {
  auto* src = cmd->add_option_group("source");
  src->add_option("--scenario", c.scenario, "Built-in scenario")
      ->check(CLI::IsMember(bilens::scenario_names()));
  src->add_option("--problem", c.problem_file, "JSON problem file");
  cmd->add_option("--grid", c.grid, "RK4 steps over [0, tf]")->check(CLI::Range(2, 1 << 24));
  cmd->add_option("--max-iters", c.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", c.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--stop-rule", stop_rule, "diff, target or both")
      ->check(CLI::IsMember({"diff", "target", "both"}));
  cmd->add_option("--alpha", c.alpha, "Exponential weight of the diagnostic norms")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--q", c.q, "Ensemble sample count")->check(CLI::PositiveNumber);
  cmd->add_option("--r-scale", c.r_scale, "Multiplier on the control weight R")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--diagnostics", c.diagnostics, "Record the contraction diagnostics");
  cmd->add_option("--mc-paths", c.mc_paths, "Monte Carlo paths per ensemble member")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "Monte Carlo seed");
  cmd->add_option("--out", c.out_dir, std::string("Output directory (default $") +
                                          bilens::kOutputRootEnv + "/<source>)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative frozen-coefficient LQR for bilinear ensemble systems"};
  app.require_subcommand(1);

  bilens::RunConfig cfg;
  std::string stop_rule;
  std::vector<double> scales;

  auto* solve = app.add_subcommand("solve", "Solve and write controls, states and a summary");
  add_common(solve, cfg, stop_rule);
  auto* validate = app.add_subcommand("validate", "Resimulate a previous solve and run Monte Carlo");
  add_common(validate, cfg, stop_rule);
  auto* sweep = app.add_subcommand("sweep", "Rerun for several absolute R scales");
  add_common(sweep, cfg, stop_rule);
  sweep->add_option("--scales", scales, "Comma-separated R scales")->delimiter(',');

  try {
    app.parse(argc, argv);
    if (!stop_rule.empty()) cfg.stop_rule = bilens::parse_stop_rule(stop_rule);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*solve) return bilens::cmd_solve(cfg, std::cout, std::cerr);
  if (*validate) return bilens::cmd_validate(cfg, std::cout, std::cerr);
  return bilens::cmd_sweep_R(cfg, scales, std::cout, std::cerr);
}
