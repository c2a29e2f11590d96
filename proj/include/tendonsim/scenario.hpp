#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tendonsim/controller.hpp"
#include "tendonsim/ident.hpp"
#include "tendonsim/model.hpp"

namespace tendonsim {

enum class ScenarioMode { simulate, probe, sweep_mu, sweep_gamma, identify, equilibria };

std::string_view to_string(ScenarioMode mode);
ScenarioMode scenario_mode_from_string(std::string_view name);

inline constexpr int kScenarioSchemaVersion = 1;

struct ProbeSettings {
  double delta_x = 0.0;  // m; 0 selects the default displacement
  double l_n = std::numeric_limits<double>::quiet_NaN();
  int continuation_steps = 2;

  bool operator==(const ProbeSettings& o) const {
    return delta_x == o.delta_x && continuation_steps == o.continuation_steps &&
           (l_n == o.l_n || (std::isnan(l_n) && std::isnan(o.l_n)));
  }
};

struct IdentifySettings {
  std::vector<double> thetas;  // rad
  std::vector<double> tau2 = {0.0};
  int repeats = 1;
  double noise_sigma = 0.0;
  double noise_relative = 0.0;
  IdentParameter anchor = IdentParameter::c1;
  std::string dataset_file;  // fit this CSV instead of generating data

  bool operator==(const IdentifySettings&) const = default;
};

struct EquilibriaSettings {
  std::vector<double> thetas;                // rad, homogeneous checks
  std::vector<Eigen::VectorXd> targets;      // rad, arbitrary configurations

  bool operator==(const EquilibriaSettings& o) const {
    if (thetas != o.thetas || targets.size() != o.targets.size()) return false;
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (targets[i].size() != o.targets[i].size() || targets[i] != o.targets[i]) return false;
    return true;
  }
};

/// One experiment. Angles are radians here; the document stores degrees.
struct Scenario {
  std::string name;
  ScenarioMode mode = ScenarioMode::simulate;
  RobotParams robot;
  std::optional<ControllerSpec> controller;
  std::optional<Eigen::Vector2d> tensions;  // open-loop constant tensions (N)
  State initial_state;
  double duration = 0.0;
  double dt = 1e-3;
  std::optional<Eigen::VectorXd> tau_ext;
  std::vector<double> sweep_values;
  std::uint64_t seed = 0;
  std::string outputs;
  bool plots = true;
  ProbeSettings probe;
  IdentifySettings identify;
  EquilibriaSettings equilibria;

  bool operator==(const Scenario& o) const;
};

class ScenarioError : public DomainError {
 public:
  ScenarioError(const std::string& what, int line)
      : DomainError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ParseOptions {
  bool strict = true;  // unknown keys are errors; otherwise warnings
};

struct ParsedScenario {
  Scenario scenario;
  std::vector<std::string> warnings;
};

ParsedScenario parse_scenario(std::string_view document, const ParseOptions& options = {});
Scenario load_scenario(const std::string& path, const ParseOptions& options = {},
                       std::vector<std::string>* warnings = nullptr);

/// YAML document that parses back to an identical Scenario.
std::string serialize_scenario(const Scenario& scenario);

/// Degrees whose conversion back to radians reproduces `rad` exactly when
/// such a value exists within a few ulps.
double degrees_round_trip(double rad);

}  // namespace tendonsim
