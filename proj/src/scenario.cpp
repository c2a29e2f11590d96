#include "tendonsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>

namespace tendonsim {

std::string_view to_string(ScenarioMode mode) {
  switch (mode) {
    case ScenarioMode::simulate: return "simulate";
    case ScenarioMode::probe: return "probe";
    case ScenarioMode::sweep_mu: return "sweep_mu";
    case ScenarioMode::sweep_gamma: return "sweep_gamma";
    case ScenarioMode::identify: return "identify";
    case ScenarioMode::equilibria: return "equilibria";
  }
  return "simulate";
}

ScenarioMode scenario_mode_from_string(std::string_view name) {
  for (ScenarioMode m : {ScenarioMode::simulate, ScenarioMode::probe, ScenarioMode::sweep_mu,
                         ScenarioMode::sweep_gamma, ScenarioMode::identify, ScenarioMode::equilibria})
    if (to_string(m) == name) return m;
  throw DomainError("unknown mode '" + std::string(name) + "'");
}

bool Scenario::operator==(const Scenario& o) const {
  auto same_vec = [](const std::optional<Eigen::VectorXd>& a, const std::optional<Eigen::VectorXd>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || (a->size() == b->size() && *a == *b);
  };
  return name == o.name && mode == o.mode && robot == o.robot && controller == o.controller &&
         tensions == o.tensions && initial_state == o.initial_state && duration == o.duration &&
         dt == o.dt && same_vec(tau_ext, o.tau_ext) && sweep_values == o.sweep_values &&
         seed == o.seed && outputs == o.outputs && plots == o.plots && probe == o.probe &&
         identify == o.identify && equilibria == o.equilibria;
}

double degrees_round_trip(double rad) {
  double deg = rad2deg(rad);
  if (deg2rad(deg) == rad) return deg;
  double up = deg, down = deg;
  for (int i = 0; i < 8; ++i) {
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    down = std::nextafter(down, -std::numeric_limits<double>::infinity());
    if (deg2rad(up) == rad) return up;
    if (deg2rad(down) == rad) return down;
  }
  return deg;
}

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

class Reader {
 public:
  explicit Reader(const ParseOptions& options) : options_(options) {}

  void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!map.IsMap()) throw ScenarioError(where + " must be a mapping", line_of(map));
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (ok.count(key)) continue;
      const std::string msg = "unknown key '" + key + "' in " + where;
      if (options_.strict) throw ScenarioError(msg, line_of(kv.first));
      warnings.push_back("line " + std::to_string(line_of(kv.first)) + ": " + msg + " (ignored)");
    }
  }

  std::vector<std::string> warnings;

 private:
  const ParseOptions& options_;
};

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ScenarioError("'" + key + "' must be a scalar", line_of(node));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioError("'" + key + "' has the wrong type", line_of(node));
  }
}

double number(const YAML::Node& node, const std::string& key) {
  const double v = scalar<double>(node, key);
  if (!std::isfinite(v)) throw ScenarioError("'" + key + "' must be finite", line_of(node));
  return v;
}

std::vector<double> number_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ScenarioError("'" + key + "' must be a list", line_of(node));
  std::vector<double> out;
  for (const auto& item : node) out.push_back(number(item, key));
  return out;
}

/// A scalar broadcasts to n entries; a list must have exactly n.
Eigen::VectorXd vector_n(const YAML::Node& node, const std::string& key, int n) {
  Eigen::VectorXd v(n);
  if (node.IsScalar()) {
    v.setConstant(number(node, key));
    return v;
  }
  const std::vector<double> list = number_list(node, key);
  if (int(list.size()) != n)
    throw ScenarioError("'" + key + "' needs " + std::to_string(n) + " entries", line_of(node));
  for (int i = 0; i < n; ++i) v(i) = list[std::size_t(i)];
  return v;
}

RobotParams preset_by_name(const YAML::Node& node) {
  const std::string name = scalar<std::string>(node, "preset");
  if (name == "identified") return presets::identified();
  if (name == "convex_synthetic") return presets::convex_synthetic();
  if (name == "desk_scale") return presets::desk_scale();
  if (name == "stiff_spine") return presets::stiff_spine();
  throw ScenarioError("unknown preset '" + name + "'", line_of(node));
}

void read_robot(const YAML::Node& node, RobotParams& p, Reader& reader) {
  reader.check_keys(node, {"n", "ell", "r", "m", "alpha1", "alpha2", "c1", "c2", "d", "k_elastic",
                           "k_bend", "u0", "gravity"},
                    "robot");
  if (node["n"]) p.n = scalar<int>(node["n"], "n");
  const std::pair<const char*, double*> fields[] = {
      {"ell", &p.ell}, {"r", &p.r}, {"m", &p.m}, {"alpha1", &p.alpha1}, {"alpha2", &p.alpha2},
      {"c1", &p.c1}, {"c2", &p.c2}, {"d", &p.d}, {"k_elastic", &p.k_elastic}, {"k_bend", &p.k_bend},
      {"u0", &p.u0}};
  for (const auto& [key, dst] : fields)
    if (node[key]) *dst = number(node[key], key);
  if (node["gravity"]) p.gravity = scalar<bool>(node["gravity"], "gravity");
}

// Angles live under `<base>_deg`, or `<base>_rad` for values no decimal
// degree reproduces exactly.
struct AngleField {
  YAML::Node node;
  std::string key;
  bool degrees;

  double to_rad(double v) const { return degrees ? deg2rad(v) : v; }
};

std::optional<AngleField> angle_field(const YAML::Node& map, const std::string& base) {
  const YAML::Node deg = map[base + "_deg"];
  const YAML::Node rad = map[base + "_rad"];
  if (deg && rad) throw ScenarioError("give " + base + "_deg or " + base + "_rad, not both", line_of(rad));
  if (deg) return AngleField{deg, base + "_deg", true};
  if (rad) return AngleField{rad, base + "_rad", false};
  return std::nullopt;
}

ControllerSpec read_controller(const YAML::Node& node, int n, Reader& reader) {
  reader.check_keys(node, {"theta_star_deg", "theta_star_rad", "tau2_star", "gamma", "kd", "saturation"},
                    "controller");
  ControllerSpec spec;
  const auto theta = angle_field(node, "theta_star");
  if (!theta) throw ScenarioError("controller.theta_star_deg is required", line_of(node));
  if (!node["gamma"]) throw ScenarioError("controller.gamma is required", line_of(node));
  spec.theta_star = theta->to_rad(number(theta->node, theta->key));
  spec.gamma = number(node["gamma"], "gamma");
  if (node["tau2_star"]) spec.tau2_star = number(node["tau2_star"], "tau2_star");
  spec.kd = Eigen::MatrixXd::Identity(n, n);
  if (const YAML::Node kd = node["kd"]) {
    if (kd.IsScalar()) {
      spec.kd *= number(kd, "kd");
    } else {
      if (!kd.IsSequence() || int(kd.size()) != n)
        throw ScenarioError("'kd' must be a scalar or an n x n list of rows", line_of(kd));
      for (int i = 0; i < n; ++i) spec.kd.row(i) = vector_n(kd[std::size_t(i)], "kd", n).transpose();
    }
  }
  if (node["saturation"]) {
    try {
      spec.saturation = saturation_policy_from_string(scalar<std::string>(node["saturation"], "saturation"));
    } catch (const DomainError& e) {
      throw ScenarioError(e.what(), line_of(node["saturation"]));
    }
  }
  return spec;
}

std::vector<double> read_angle_list(const AngleField& field) {
  const YAML::Node& node = field.node;
  const std::string& key = field.key;
  std::vector<double> out;
  if (node.IsMap()) {
    // {from, to, count}: evenly spaced, end points included.
    for (const char* k : {"from", "to", "count"})
      if (!node[k]) throw ScenarioError(key + " range needs from, to and count", line_of(node));
    const double from = number(node["from"], "from");
    const double to = number(node["to"], "to");
    const int count = scalar<int>(node["count"], "count");
    if (count < 1) throw ScenarioError(key + " count must be >= 1", line_of(node["count"]));
    for (int i = 0; i < count; ++i)
      out.push_back(field.to_rad(count == 1 ? from : from + (to - from) * double(i) / double(count - 1)));
    return out;
  }
  for (double d : number_list(node, key)) out.push_back(field.to_rad(d));
  return out;
}

template <typename F>
void at(const YAML::Node& node, F&& f) {
  try {
    f();
  } catch (const ScenarioError&) {
    throw;
  } catch (const DomainError& e) {
    throw ScenarioError(e.what(), line_of(node));
  }
}

}  // namespace

ParsedScenario parse_scenario(std::string_view document, const ParseOptions& options) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(document));
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(std::string("malformed document: ") + e.msg, e.mark.line + 1);
  }
  if (!root || !root.IsMap()) throw ScenarioError("scenario document must be a mapping", 0);
  Reader reader(options);
  reader.check_keys(root, {"schema_version", "name", "mode", "preset", "robot", "controller", "tensions",
                           "initial_state", "duration", "dt", "tau_ext", "sweep_values", "seed", "outputs",
                           "plots", "probe", "identify", "equilibria"},
                    "scenario");

  if (!root["schema_version"]) throw ScenarioError("schema_version is required", line_of(root));
  const int version = scalar<int>(root["schema_version"], "schema_version");
  if (version != kScenarioSchemaVersion)
    throw ScenarioError("unsupported schema_version " + std::to_string(version), line_of(root["schema_version"]));

  Scenario sc;
  if (!root["name"]) throw ScenarioError("name is required", line_of(root));
  sc.name = scalar<std::string>(root["name"], "name");
  if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos)
    throw ScenarioError("name must be a non-empty identifier without path separators", line_of(root["name"]));
  if (!root["mode"]) throw ScenarioError("mode is required", line_of(root));
  at(root["mode"], [&] { sc.mode = scenario_mode_from_string(scalar<std::string>(root["mode"], "mode")); });

  sc.robot = root["preset"] ? preset_by_name(root["preset"]) : presets::identified();
  if (root["robot"]) read_robot(root["robot"], sc.robot, reader);
  at(root["robot"] ? root["robot"] : root, [&] { validate(sc.robot); });
  const int n = sc.robot.n;

  if (root["controller"]) {
    sc.controller = read_controller(root["controller"], n, reader);
    at(root["controller"], [&] { validate(*sc.controller, sc.robot); });
  }
  if (root["tensions"]) {
    const YAML::Node t = root["tensions"];
    const Eigen::VectorXd u = vector_n(t, "tensions", 2);
    if ((u.array() < 0.0).any()) throw ScenarioError("tensions must be >= 0", line_of(t));
    sc.tensions = Eigen::Vector2d(u(0), u(1));
  }

  sc.initial_state = State::at_rest(Eigen::VectorXd::Zero(n));
  if (const YAML::Node init = root["initial_state"]) {
    reader.check_keys(init, {"q_deg", "q_rad", "p"}, "initial_state");
    if (const auto q = angle_field(init, "q"))
      sc.initial_state.q = vector_n(q->node, q->key, n).unaryExpr([&](double v) { return q->to_rad(v); });
    if (init["p"]) sc.initial_state.p = vector_n(init["p"], "p", n);
    at(init, [&] { validate(sc.initial_state, n); });
  }

  if (root["duration"]) sc.duration = number(root["duration"], "duration");
  if (root["dt"]) sc.dt = number(root["dt"], "dt");
  if (!(sc.dt > 0.0)) throw ScenarioError("dt must be > 0", line_of(root["dt"] ? root["dt"] : root));
  if (root["tau_ext"]) sc.tau_ext = vector_n(root["tau_ext"], "tau_ext", n);
  if (root["sweep_values"]) sc.sweep_values = number_list(root["sweep_values"], "sweep_values");
  if (root["seed"]) sc.seed = scalar<std::uint64_t>(root["seed"], "seed");
  sc.outputs = root["outputs"] ? scalar<std::string>(root["outputs"], "outputs") : "out/" + sc.name;
  if (root["plots"]) sc.plots = scalar<bool>(root["plots"], "plots");

  if (const YAML::Node pr = root["probe"]) {
    reader.check_keys(pr, {"delta_x", "l_n", "continuation_steps"}, "probe");
    if (pr["delta_x"]) sc.probe.delta_x = number(pr["delta_x"], "delta_x");
    if (pr["l_n"]) sc.probe.l_n = number(pr["l_n"], "l_n");
    if (pr["continuation_steps"]) sc.probe.continuation_steps = scalar<int>(pr["continuation_steps"], "continuation_steps");
    if (sc.probe.delta_x < 0.0) throw ScenarioError("probe.delta_x must be >= 0", line_of(pr));
    if (sc.probe.continuation_steps < 1) throw ScenarioError("probe.continuation_steps must be >= 1", line_of(pr));
  }

  if (const YAML::Node id = root["identify"]) {
    reader.check_keys(id, {"thetas_deg", "thetas_rad", "tau2", "repeats", "noise_sigma", "noise_relative", "anchor", "dataset_file"},
                      "identify");
    if (const auto t = angle_field(id, "thetas")) sc.identify.thetas = read_angle_list(*t);
    if (id["tau2"]) {
      sc.identify.tau2 = id["tau2"].IsScalar() ? std::vector<double>{number(id["tau2"], "tau2")}
                                               : number_list(id["tau2"], "tau2");
      for (double v : sc.identify.tau2)
        if (v < 0.0) throw ScenarioError("identify.tau2 must be >= 0", line_of(id["tau2"]));
    }
    if (id["repeats"]) sc.identify.repeats = scalar<int>(id["repeats"], "repeats");
    if (id["noise_sigma"]) sc.identify.noise_sigma = number(id["noise_sigma"], "noise_sigma");
    if (id["noise_relative"]) sc.identify.noise_relative = number(id["noise_relative"], "noise_relative");
    if (id["anchor"])
      at(id["anchor"], [&] { sc.identify.anchor = ident_parameter_from_string(scalar<std::string>(id["anchor"], "anchor")); });
    if (id["dataset_file"]) sc.identify.dataset_file = scalar<std::string>(id["dataset_file"], "dataset_file");
    if (sc.identify.repeats < 1) throw ScenarioError("identify.repeats must be >= 1", line_of(id));
    if (sc.identify.noise_sigma < 0.0 || sc.identify.noise_relative < 0.0)
      throw ScenarioError("identify noise levels must be >= 0", line_of(id));
  }

  if (const YAML::Node eq = root["equilibria"]) {
    reader.check_keys(eq, {"thetas_deg", "thetas_rad", "targets_deg", "targets_rad"}, "equilibria");
    if (const auto t = angle_field(eq, "thetas")) sc.equilibria.thetas = read_angle_list(*t);
    if (const auto field = angle_field(eq, "targets")) {
      const YAML::Node& targets = field->node;
      if (!targets.IsSequence())
        throw ScenarioError(field->key + " must be a list of configurations", line_of(targets));
      for (const auto& t : targets) {
        const auto list = number_list(t, field->key);
        if (int(list.size()) != n)
          throw ScenarioError("each target needs " + std::to_string(n) + " angles", line_of(t));
        Eigen::VectorXd q(n);
        for (int i = 0; i < n; ++i) q(i) = field->to_rad(list[std::size_t(i)]);
        sc.equilibria.targets.push_back(q);
      }
    }
  }

  // Mode requirements.
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw ScenarioError("mode " + std::string(to_string(sc.mode)) + " requires " + what, line_of(root["mode"]));
  };
  switch (sc.mode) {
    case ScenarioMode::simulate:
      need(sc.controller.has_value() != sc.tensions.has_value(), "exactly one of controller or tensions");
      need(sc.duration >= sc.dt, "duration >= dt");
      break;
    case ScenarioMode::probe:
      need(sc.controller.has_value() != sc.tensions.has_value(), "exactly one of controller or tensions");
      if (sc.tensions) need((*sc.tensions)(0) == (*sc.tensions)(1), "balanced tensions (u1 == u2) for the straight equilibrium");
      break;
    case ScenarioMode::sweep_mu:
      need(!sc.sweep_values.empty(), "sweep_values");
      for (double v : sc.sweep_values) need(v >= 0.0, "sweep_values >= 0");
      break;
    case ScenarioMode::sweep_gamma:
      need(sc.controller.has_value(), "controller");
      need(sc.sweep_values.size() >= 2, "sweep_values (at least two gains)");
      for (double v : sc.sweep_values) need(v > 0.0, "sweep_values > 0 (gamma > 0)");
      break;
    case ScenarioMode::identify: {
      need(root["identify"].IsDefined(), "an identify section");
      std::set<double> distinct(sc.identify.thetas.begin(), sc.identify.thetas.end());
      need(!sc.identify.dataset_file.empty() || distinct.size() >= 3,
           "identify.thetas_deg with at least three distinct angles, or identify.dataset_file");
      need(sc.identify.tau2.size() == 1 || sc.identify.tau2.size() == sc.identify.thetas.size(),
           "identify.tau2 with one entry or one per angle");
      break;
    }
    case ScenarioMode::equilibria:
      break;
  }
  return {std::move(sc), std::move(reader.warnings)};
}

Scenario load_scenario(const std::string& path, const ParseOptions& options, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ParsedScenario parsed = parse_scenario(buf.str(), options);
  if (warnings) *warnings = std::move(parsed.warnings);
  return std::move(parsed.scenario);
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // Keep integral values recognisable as floating point.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string list(const std::vector<double>& values) {
  std::string s = "[";
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + num(values[i]);
  return s + "]";
}

std::string list(const Eigen::VectorXd& v) { return list(std::vector<double>(v.data(), v.data() + v.size())); }

// `<base>_deg: [...]` when every value survives the trip through degrees,
// otherwise `<base>_rad`.
std::string angles(const std::string& base, const std::vector<double>& rad, bool as_list = true) {
  std::vector<double> deg;
  bool exact = true;
  for (double r : rad) {
    deg.push_back(degrees_round_trip(r));
    exact = exact && deg2rad(deg.back()) == r;
  }
  const std::vector<double>& shown = exact ? deg : rad;
  return base + (exact ? "_deg: " : "_rad: ") + (as_list ? list(shown) : num(shown.front()));
}

std::string angles(const std::string& base, const Eigen::VectorXd& rad) {
  return angles(base, std::vector<double>(rad.data(), rad.data() + rad.size()));
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string serialize_scenario(const Scenario& sc) {
  std::ostringstream y;
  const RobotParams& p = sc.robot;
  y << "schema_version: " << kScenarioSchemaVersion << '\n';
  y << "name: " << quoted(sc.name) << '\n';
  y << "mode: " << to_string(sc.mode) << '\n';
  y << "robot:\n"
    << "  n: " << p.n << '\n'
    << "  ell: " << num(p.ell) << '\n'
    << "  r: " << num(p.r) << '\n'
    << "  m: " << num(p.m) << '\n'
    << "  alpha1: " << num(p.alpha1) << '\n'
    << "  alpha2: " << num(p.alpha2) << '\n'
    << "  c1: " << num(p.c1) << '\n'
    << "  c2: " << num(p.c2) << '\n'
    << "  d: " << num(p.d) << '\n'
    << "  k_elastic: " << num(p.k_elastic) << '\n'
    << "  k_bend: " << num(p.k_bend) << '\n'
    << "  u0: " << num(p.u0) << '\n'
    << "  gravity: " << (p.gravity ? "true" : "false") << '\n';
  if (sc.controller) {
    const ControllerSpec& c = *sc.controller;
    y << "controller:\n"
      << "  " << angles("theta_star", {c.theta_star}, false) << '\n'
      << "  tau2_star: " << num(c.tau2_star) << '\n'
      << "  gamma: " << num(c.gamma) << '\n';
    const double k0 = c.kd(0, 0);
    if (c.kd == k0 * Eigen::MatrixXd::Identity(c.kd.rows(), c.kd.cols())) {
      y << "  kd: " << num(k0) << '\n';
    } else {
      y << "  kd:\n";
      for (Eigen::Index i = 0; i < c.kd.rows(); ++i) y << "    - " << list(Eigen::VectorXd(c.kd.row(i).transpose())) << '\n';
    }
    y << "  saturation: " << to_string(c.saturation) << '\n';
  }
  if (sc.tensions) y << "tensions: [" << num((*sc.tensions)(0)) << ", " << num((*sc.tensions)(1)) << "]\n";
  y << "initial_state:\n"
    << "  " << angles("q", sc.initial_state.q) << '\n'
    << "  p: " << list(sc.initial_state.p) << '\n';
  y << "duration: " << num(sc.duration) << '\n';
  y << "dt: " << num(sc.dt) << '\n';
  if (sc.tau_ext) y << "tau_ext: " << list(*sc.tau_ext) << '\n';
  if (!sc.sweep_values.empty()) y << "sweep_values: " << list(sc.sweep_values) << '\n';
  y << "seed: " << sc.seed << '\n';
  y << "outputs: " << quoted(sc.outputs) << '\n';
  y << "plots: " << (sc.plots ? "true" : "false") << '\n';
  y << "probe:\n"
    << "  delta_x: " << num(sc.probe.delta_x) << '\n';
  if (!std::isnan(sc.probe.l_n)) y << "  l_n: " << num(sc.probe.l_n) << '\n';
  y << "  continuation_steps: " << sc.probe.continuation_steps << '\n';
  const IdentifySettings& id = sc.identify;
  const bool has_identify = sc.mode == ScenarioMode::identify || !id.thetas.empty() || !id.dataset_file.empty() ||
                            !(id == IdentifySettings{});
  if (has_identify) {
    y << "identify:\n";
    if (!id.thetas.empty()) y << "  " << angles("thetas", id.thetas) << '\n';
    y << "  tau2: " << list(id.tau2) << '\n'
      << "  repeats: " << id.repeats << '\n'
      << "  noise_sigma: " << num(id.noise_sigma) << '\n'
      << "  noise_relative: " << num(id.noise_relative) << '\n'
      << "  anchor: " << to_string(id.anchor) << '\n';
    if (!id.dataset_file.empty()) y << "  dataset_file: " << quoted(id.dataset_file) << '\n';
  }
  if (!sc.equilibria.thetas.empty() || !sc.equilibria.targets.empty()) {
    y << "equilibria:\n";
    if (!sc.equilibria.thetas.empty()) y << "  " << angles("thetas", sc.equilibria.thetas) << '\n';
    if (!sc.equilibria.targets.empty()) {
      std::vector<double> all;
      for (const auto& t : sc.equilibria.targets) all.insert(all.end(), t.data(), t.data() + t.size());
      const bool exact = angles("targets", all).find("_deg") != std::string::npos;
      y << "  targets_" << (exact ? "deg" : "rad") << ":\n";
      for (const auto& t : sc.equilibria.targets) {
        Eigen::VectorXd shown = t;
        if (exact) shown = t.unaryExpr([](double r) { return degrees_round_trip(r); });
        y << "    - " << list(shown) << '\n';
      }
    }
  }
  return y.str();
}

}  // namespace tendonsim
