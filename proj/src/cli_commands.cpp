#include "bilens/cli_commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <ostream>
#include <sstream>

#include "bilens/problem_io.hpp"

namespace bilens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : path_(path), out_(path) {
    if (!out_) throw InvalidArgument("cannot write '" + path.string() + "'");
  }
  void header(const std::string& first, const std::string& prefix, Eigen::Index count) {
    out_ << first;
    for (Eigen::Index i = 1; i <= count; ++i) out_ << ',' << prefix << i;
    out_ << '\n';
  }
  void row(double t, const Eigen::VectorXd& v) {
    out_ << fmt(t);
    for (Eigen::Index i = 0; i < v.size(); ++i) out_ << ',' << fmt(v(i));
    out_ << '\n';
  }
  std::ofstream& stream() { return out_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json config_json(const RunConfig& c, const Scenario& sc) {
  json j;
  j["source"] = c.scenario ? "scenario" : "problem";
  j["scenario"] = c.scenario ? json(*c.scenario) : json(nullptr);
  j["problem"] = c.problem_file ? json(*c.problem_file) : json(nullptr);
  j["grid"] = sc.opts.steps;
  j["max_iters"] = sc.opts.max_iters;
  j["tol"] = sc.opts.tol;
  j["stop_rule"] = to_string(sc.opts.stop_rule);
  j["alpha"] = sc.opts.alpha;
  j["q"] = sc.spec.q;
  j["r_scale"] = c.r_scale ? json(*c.r_scale) : json(nullptr);
  j["diagnostics"] = c.diagnostics;
  j["mc_paths"] = c.mc_paths;
  j["seed"] = c.seed;
  j["out"] = output_dir(c);
  return j;
}

std::string source_stem(const RunConfig& c) {
  if (c.scenario) return *c.scenario;
  return fs::path(*c.problem_file).stem().string();
}

/// Max-abs difference over nodes and components.
double sup_diff(const VectorTrajectory& a, const VectorTrajectory& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out = std::max(out, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return out;
}

std::vector<std::vector<double>> read_csv(const fs::path& path, std::size_t columns,
                                          const std::string& header) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw InvalidArgument(path.string() + ": line 1: expected header '" + header + "'");
  }
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw InvalidArgument(path.string() + ": line " + std::to_string(lineno) +
                              ": not a number: '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != columns) {
      throw InvalidArgument(path.string() + ": line " + std::to_string(lineno) + ": expected " +
                            std::to_string(columns) + " columns, got " +
                            std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_header(const std::string& prefix, Eigen::Index count) {
  std::string h = "t";
  for (Eigen::Index i = 1; i <= count; ++i) h += "," + prefix + std::to_string(i);
  return h;
}

/// Rows (t, v1..vk) as a trajectory on the uniform grid over [0, tf].
VectorTrajectory trajectory_from_rows(const std::vector<std::vector<double>>& rows, double tf,
                                      const std::string& what) {
  if (rows.size() < 3) throw InvalidArgument(what + ": needs at least 3 rows");
  const TimeGrid grid(0.0, tf, static_cast<int>(rows.size()) - 1);
  std::vector<Eigen::VectorXd> values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::abs(rows[i][0] - grid.node(i)) > 1e-9 * (1.0 + tf)) {
      throw InvalidArgument(what + ": row " + std::to_string(i + 1) + " time " + fmt(rows[i][0]) +
                            " is not on the uniform grid over [0, " + fmt(tf) + "]");
    }
    values.push_back(Eigen::Map<const Eigen::VectorXd>(rows[i].data() + 1,
                                                       static_cast<Eigen::Index>(rows[i].size() - 1)));
  }
  return VectorTrajectory(grid, std::move(values));
}

/// Restores the source of a previous run from its summary.json.
RunConfig config_from_summary(const RunConfig& c, const fs::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) {
    throw InvalidArgument("no --scenario/--problem given and no summary.json in '" + dir.string() + "'");
  }
  json s;
  try {
    s = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument((dir / "summary.json").string() + ": " + e.what());
  }
  RunConfig out = c;
  const json& cfg = s.at("config");
  if (cfg.at("scenario").is_string()) out.scenario = cfg["scenario"].get<std::string>();
  if (cfg.at("problem").is_string()) out.problem_file = cfg["problem"].get<std::string>();
  out.q = cfg.at("q").get<int>();
  if (cfg.at("r_scale").is_number()) out.r_scale = cfg["r_scale"].get<double>();
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (scenario.has_value() == problem_file.has_value()) {
    throw InvalidArgument("exactly one of --scenario and --problem is required");
  }
  if (mc_paths < 0) throw InvalidArgument("--mc-paths must be non-negative");
}

Scenario resolve_source(const RunConfig& c) {
  c.validate();
  Scenario sc;
  if (c.scenario) {
    ScenarioId id{*c.scenario, {}};
    if (c.q) id.overrides["q"] = *c.q;
    if (c.r_scale) id.overrides["r_scale"] = *c.r_scale;
    sc = build(id);
  } else {
    sc = load_problem_file(*c.problem_file);
    if (c.q) {
      if (sc.name == "file_problem" || sc.name == "file_ensemble") {
        throw InvalidArgument("--q applies only to parameterized scenarios");
      }
      sc.spec.q = *c.q;
    }
    if (c.r_scale) {
      if (!(*c.r_scale > 0.0)) throw InvalidArgument("r_scale must be positive");
      sc.spec.R *= *c.r_scale;
    }
  }
  if (c.grid) sc.opts.steps = *c.grid;
  if (c.max_iters) sc.opts.max_iters = *c.max_iters;
  if (c.tol) sc.opts.tol = *c.tol;
  if (c.stop_rule) sc.opts.stop_rule = *c.stop_rule;
  sc.opts.alpha = c.alpha;
  sc.opts.record_diagnostics = c.diagnostics;
  sc.spec.validate();
  sc.opts.validate();
  return sc;
}

std::string output_dir(const RunConfig& c, const std::string& suffix) {
  if (!c.out_dir.empty()) return c.out_dir;
  const char* root = std::getenv(kOutputRootEnv);
  const fs::path base = (root != nullptr && *root != '\0') ? fs::path(root) : fs::path("bilens_runs");
  return (base / (source_stem(c) + suffix)).string();
}

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const Scenario sc = resolve_source(config);
    const fs::path dir = output_dir(config);
    fs::create_directories(dir);
    const BilinearProblem prob = sc.problem();
    const SolveResult res = solve(prob, sc.opts);
    const IterationState& fin = res.final;
    const TimeGrid& grid = fin.x.grid();

    {
      CsvWriter w(dir / "control.csv");
      w.header("t", "u", prob.m());
      for (std::size_t i = 0; i < grid.size(); ++i) w.row(grid.node(i), fin.u[i]);
    }
    const int q = static_cast<int>(sc.samples().size());
    const Eigen::Index bn = sc.spec.base_n;
    for (int j = 0; j < q; ++j) {
      CsvWriter w(dir / ("state_" + std::to_string(j + 1) + ".csv"));
      w.header("t", "x", bn);
      for (std::size_t i = 0; i < grid.size(); ++i) w.row(grid.node(i), member_block(fin.x[i], bn, j));
    }
    {
      CsvWriter w(dir / "convergence.csv");
      auto& s = w.stream();
      s << "k,diff_x,cost,criterion_sum,rho\n";
      for (std::size_t i = 0; i < res.history.size(); ++i) {
        const HistoryEntry& h = res.history[i];
        s << h.k << ',' << fmt(h.diff_x) << ',' << fmt(h.cost) << ',';
        if (res.diagnostics) {
          const ContractionReport& r = res.diagnostics->steps[i];
          s << fmt(r.criterion_sum) << ',' << fmt(r.rho);
        } else {
          s << ',';
        }
        s << '\n';
      }
    }

    const NFamily N = assemble_N(prob.bilinear());
    const HjbResidual hjb = hjb_residual(prob, N, fin);
    const NecessaryConditionResidual nc = necessary_condition_residual(prob, N, fin);
    const ScenarioMetrics metrics = report_metrics(sc, res);

    json summary;
    summary["scenario"] = sc.name;
    summary["config"] = config_json(config, sc);
    summary["converged"] = res.converged;
    summary["iterations"] = res.iterations_used;
    summary["cost"] = fin.cost;
    summary["J1"] = metrics.scalars.at("terminal_cost_riemann");
    summary["terminal_distance"] = terminal_distance(prob, fin.x.back());
    summary["hjb_residual"] = {{"sup", hjb.sup_abs}, {"relative", hjb.relative()}, {"term_scale", hjb.term_scale}};
    summary["necessary_condition_residual"] = {{"state_sup", nc.state_sup},
                                               {"state_relative", nc.state_relative()},
                                               {"costate_sup", nc.costate_sup},
                                               {"costate_relative", nc.costate_relative()}};
    json m;
    for (const auto& [k, v] : metrics.scalars) m[k] = v;
    for (const auto& [k, v] : metrics.series) m[k] = v;
    summary["metrics"] = m;
    if (res.diagnostics) {
      const auto cross = res.diagnostics->crossover_iteration();
      summary["criterion_crossover"] = cross ? json(*cross) : json(nullptr);
    }
    summary["notes"] = sc.notes;
    write_json(dir / "summary.json", summary);

    out << sc.name << ": " << (res.converged ? "converged" : "not converged") << " after "
        << res.iterations_used << " iterations, cost " << fmt(fin.cost) << " -> " << dir.string()
        << '\n';
    return res.converged ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const fs::path dir = output_dir(config);
    const RunConfig cfg =
        (config.scenario || config.problem_file) ? config : config_from_summary(config, dir);
    const Scenario sc = resolve_source(cfg);
    const BilinearProblem prob = sc.problem();
    const VectorTrajectory u = trajectory_from_rows(
        read_csv(dir / "control.csv", static_cast<std::size_t>(prob.m()) + 1, csv_header("u", prob.m())),
        prob.tf(), "control.csv");
    const TimeGrid& grid = u.grid();
    const int q = static_cast<int>(sc.samples().size());
    const Eigen::Index bn = sc.spec.base_n;

    const VectorTrajectory xs = resimulate_bilinear(prob, u);
    json report;
    report["scenario"] = sc.name;
    report["control_nodes"] = grid.size();
    bool gated_failure = false;

    std::vector<double> terminal_errors;
    const auto samples = sc.samples();
    for (int j = 0; j < q; ++j) {
      const SampleSystem s = sc.spec.coeffs(samples[j]);
      terminal_errors.push_back((member_block(xs.back(), bn, j) - s.xd).norm());
    }
    report["terminal_error"] = terminal_errors;

    // Fixed-point consistency against the stored states, when present.
    double fp = 0.0;
    bool have_states = true;
    for (int j = 0; j < q && have_states; ++j) {
      const fs::path p = dir / ("state_" + std::to_string(j + 1) + ".csv");
      if (!fs::exists(p)) {
        have_states = false;
        break;
      }
      const VectorTrajectory stored = trajectory_from_rows(
          read_csv(p, static_cast<std::size_t>(bn) + 1, csv_header("x", bn)), prob.tf(), p.filename().string());
      if (!(stored.grid() == grid)) throw InvalidArgument(p.string() + ": grid differs from control.csv");
      std::vector<Eigen::VectorXd> member;
      for (std::size_t i = 0; i < grid.size(); ++i) member.push_back(member_block(xs[i], bn, j));
      fp = std::max(fp, sup_diff(stored, VectorTrajectory(grid, std::move(member))));
    }
    if (have_states) {
      const bool pass = fp < kFixedPointThreshold;
      report["fixed_point"] = {{"sup_error", fp}, {"threshold", kFixedPointThreshold}, {"passed", pass}};
      gated_failure |= !pass;
    } else {
      report["fixed_point"] = nullptr;
    }

    if (sc.noise && cfg.mc_paths > 0) {
      MeanComparison worst;
      int worst_member = 0;
      for (int j = 0; j < q; ++j) {
        const BilinearProblem member = sc.member_problem(samples[j]);
        const VectorTrajectory reference = resimulate_bilinear(expected_reduction(member, *sc.noise), u);
        const PathOptions po{.paths = cfg.mc_paths, .seed = cfg.seed, .stream = static_cast<std::uint32_t>(j)};
        const PathBatch batch = sc.noise->kind == NoiseKind::kPoisson
                                    ? simulate_poisson_paths(member, *sc.noise, u, po)
                                    : simulate_wiener_paths(member, *sc.noise, u, po);
        const MeanComparison cmp = mc_mean_compare(batch, reference);
        if (j == 0 || cmp.max_standardized > worst.max_standardized) {
          worst = cmp;
          worst_member = j;
        }
      }
      const bool gated = cfg.mc_paths >= kMinGatedPaths;
      const bool pass = worst.max_standardized < kMcThreshold;
      report["monte_carlo"] = {{"kind", to_string(sc.noise->kind)},
                               {"paths", cfg.mc_paths},
                               {"seed", cfg.seed},
                               {"max_standardized_deviation", worst.max_standardized},
                               {"worst_member", worst_member + 1},
                               {"worst_node", worst.worst_node},
                               {"worst_component", worst.worst_component + 1},
                               {"threshold", kMcThreshold},
                               {"gated", gated},
                               {"passed", pass}};
      gated_failure |= gated && !pass;
    } else {
      report["monte_carlo"] = nullptr;
    }
    write_json(dir / "validate.json", report);
    out << sc.name << ": validation " << (gated_failure ? "FAILED" : "passed") << " -> "
        << (dir / "validate.json").string() << '\n';
    return gated_failure ? 2 : 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_sweep_R(const RunConfig& config, const std::vector<double>& scales, std::ostream& out,
                std::ostream& err) {
  try {
    if (scales.empty()) throw InvalidArgument("empty scale list (pass --scales s1,s2,...)");
    for (double s : scales) {
      if (!(s > 0.0)) throw InvalidArgument("scales must be positive, got " + fmt(s));
    }
    RunConfig cfg = config;
    cfg.diagnostics = true;
    const Scenario base = resolve_source(cfg);
    const Eigen::MatrixXd R0 = base.spec.R / (base.spec.R.trace() / static_cast<double>(base.spec.R.rows()));
    const fs::path dir = output_dir(config, "_sweep");
    fs::create_directories(dir);

    std::ofstream csv(dir / "sweep.csv");
    if (!csv) throw InvalidArgument("cannot write '" + (dir / "sweep.csv").string() + "'");
    csv << "scale,status,converged,iterations,crossover,cost,terminal_error\n";
    out << "scale      status      iters  crossover  cost             terminal_error\n";
    for (double s : scales) {
      Scenario sc = base;
      sc.spec.R = s * R0;
      std::string status, crossover = "";
      int iters = 0;
      double cost = std::numeric_limits<double>::quiet_NaN();
      double terminal = cost;
      bool converged = false;
      try {
        const SolveResult res = solve(sc.problem(), sc.opts);
        converged = res.converged;
        iters = res.iterations_used;
        status = converged ? "converged" : "max_iters";
        cost = res.final.cost;
        terminal = std::sqrt(terminal_cost_riemann(sc.spec, sc.samples(), res.final.x.back()));
        if (const auto c = res.diagnostics->crossover_iteration()) crossover = std::to_string(*c);
      } catch (const NumericalBlowUp& e) {
        status = "diverged";
        err << "scale " << fmt(s) << ": " << e.what() << '\n';
      }
      csv << fmt(s) << ',' << status << ',' << (converged ? 1 : 0) << ',' << iters << ',' << crossover
          << ',' << fmt(cost) << ',' << fmt(terminal) << '\n';
      char line[160];
      std::snprintf(line, sizeof line, "%-10g %-11s %-6d %-10s %-16.9g %.6g\n", s, status.c_str(), iters,
                    crossover.empty() ? "-" : crossover.c_str(), cost, terminal);
      out << line;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bilens
