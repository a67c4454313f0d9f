#include "bilens/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace bilens {

namespace {

using nlohmann::json;

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw InvalidArgument(origin_ + ": field '" + field + "': " + what);
  }

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(join(path, key), "missing");
    return *it;
  }

  double number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number, got " + std::string(v.type_name()));
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(field, "not finite");
    return d;
  }

  int positive_int(const json& v, const std::string& field) const {
    if (!v.is_number_integer() || v.get<long long>() < 1) fail(field, "expected a positive integer");
    return static_cast<int>(v.get<long long>());
  }

  Eigen::VectorXd vector(const json& v, const std::string& field, Eigen::Index len) const {
    if (!v.is_array()) fail(field, "expected an array of " + std::to_string(len) + " numbers");
    if (static_cast<Eigen::Index>(v.size()) != len) {
      fail(field, "expected " + std::to_string(len) + " entries, got " + std::to_string(v.size()));
    }
    Eigen::VectorXd out(len);
    for (Eigen::Index i = 0; i < len; ++i) {
      out(i) = number(v[static_cast<std::size_t>(i)], field + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  Eigen::MatrixXd matrix(const json& v, const std::string& field, Eigen::Index rows,
                         Eigen::Index cols) const {
    const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows) {
      fail(field, "expected a " + shape + " matrix as " + std::to_string(rows) + " row arrays");
    }
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      out.row(r) = vector(v[static_cast<std::size_t>(r)], field + "[" + std::to_string(r) + "]", cols)
                       .transpose();
    }
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::string origin_;
};

SampleSystem read_member(const Reader& rd, const json& obj, const std::string& path,
                         Eigen::Index n, Eigen::Index m) {
  auto f = [&](const char* key) { return Reader::join(path, key); };
  SampleSystem s;
  s.A = rd.matrix(rd.require(obj, "A", path), f("A"), n, n);
  s.B = rd.matrix(rd.require(obj, "B", path), f("B"), n, m);
  const json& blist = rd.require(obj, "Blist", path);
  if (!blist.is_array() || static_cast<Eigen::Index>(blist.size()) != m) {
    rd.fail(f("Blist"), "expected " + std::to_string(m) + " matrices (one per control)");
  }
  for (std::size_t i = 0; i < blist.size(); ++i) {
    s.bilinear.push_back(rd.matrix(blist[i], f("Blist") + "[" + std::to_string(i) + "]", n, n));
  }
  s.g = rd.vector(rd.require(obj, "g", path), f("g"), n);
  s.x0 = rd.vector(rd.require(obj, "x0", path), f("x0"), n);
  s.xd = rd.vector(rd.require(obj, "xd", path), f("xd"), n);
  return s;
}

NoiseSpec read_noise(const Reader& rd, const json& obj, Eigen::Index n) {
  const json& kind = rd.require(obj, "kind", "noise");
  NoiseSpec spec;
  if (kind == "poisson") {
    spec.kind = NoiseKind::kPoisson;
  } else if (kind == "wiener") {
    spec.kind = NoiseKind::kWiener;
  } else {
    rd.fail("noise.kind", "expected \"poisson\" or \"wiener\"");
  }
  const json& G = rd.require(obj, "G", "noise");
  if (!G.is_array() || G.empty() || !G[0].is_array()) rd.fail("noise.G", "expected an n x k matrix");
  const auto k = static_cast<Eigen::Index>(G[0].size());
  spec.G = rd.matrix(G, "noise.G", n, k);
  if (spec.kind == NoiseKind::kPoisson) {
    spec.lambda = rd.vector(rd.require(obj, "lambda", "noise"), "noise.lambda", k);
  } else if (obj.contains("lambda")) {
    spec.lambda = rd.vector(obj["lambda"], "noise.lambda", k);
  }
  try {
    spec.validate(n);
  } catch (const InvalidArgument& e) {
    rd.fail("noise", e.what());
  }
  return spec;
}

Scenario builtin(const Reader& rd, const json& root) {
  ScenarioId id;
  const json& name = root["scenario"];
  if (!name.is_string()) rd.fail("scenario", "expected a scenario name");
  id.name = name.get<std::string>();
  if (root.contains("overrides")) {
    const json& ov = root["overrides"];
    if (!ov.is_object()) rd.fail("overrides", "expected an object of name: number");
    for (const auto& [key, value] : ov.items()) id.overrides[key] = rd.number(value, "overrides." + key);
  }
  try {
    return build(id);
  } catch (const InvalidArgument& e) {
    rd.fail("scenario", e.what());
  }
}

}  // namespace

Scenario parse_problem_json(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // The library message already carries line and column.
    std::string what = e.what();
    const auto pos = what.find("parse error");
    throw InvalidArgument(origin + ": " + (pos == std::string::npos ? what : what.substr(pos)));
  }
  const Reader rd(origin);
  if (!root.is_object()) rd.fail("<root>", "expected a JSON object");
  if (root.contains("scenario")) return builtin(rd, root);

  const Eigen::Index n = rd.positive_int(rd.require(root, "n", ""), "n");
  const Eigen::Index m = rd.positive_int(rd.require(root, "m", ""), "m");
  Scenario sc;
  sc.spec.base_n = n;
  sc.spec.base_m = m;
  sc.spec.tf = rd.number(rd.require(root, "tf", ""), "tf");
  if (!(sc.spec.tf > 0.0)) rd.fail("tf", "must be positive");
  sc.spec.R = rd.matrix(rd.require(root, "R", ""), "R", m, m);

  if (root.contains("samples")) {
    const json& arr = root["samples"];
    if (!arr.is_array() || arr.empty()) rd.fail("samples", "expected a non-empty array");
    std::vector<SampleSystem> members;
    for (std::size_t j = 0; j < arr.size(); ++j) {
      members.push_back(read_member(rd, arr[j], "samples[" + std::to_string(j) + "]", n, m));
    }
    const int q = static_cast<int>(members.size());
    sc.name = "file_ensemble";
    sc.spec.q = q;
    sc.spec.box = ParamBox{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, q - 1)};
    sc.spec.coeffs = [members](const Eigen::VectorXd& beta) {
      return members.at(static_cast<std::size_t>(std::lround(beta(0))));
    };
  } else {
    const SampleSystem member = read_member(rd, root, "", n, m);
    sc.name = "file_problem";
    sc.spec.q = 1;
    sc.spec.box = ParamBox{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    sc.spec.coeffs = [member](const Eigen::VectorXd&) { return member; };
    if (root.contains("terminal_weight")) {
      const double w = rd.number(root["terminal_weight"], "terminal_weight");
      if (!(w > 0.0)) rd.fail("terminal_weight", "must be positive");
      sc.terminal_weight = w;
    }
  }
  if (root.contains("noise")) sc.noise = read_noise(rd, root["noise"], n);

  try {
    sc.spec.validate();
    (void)sc.problem();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(origin + ": " + e.what());
  }
  return sc;
}

Scenario load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read problem file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_json(buf.str(), path);
}

}  // namespace bilens
