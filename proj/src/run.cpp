#include "tendonsim/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tendonsim/analysis.hpp"
#include "tendonsim/controller.hpp"
#include "tendonsim/dynamics.hpp"
#include "tendonsim/ident.hpp"
#include "tendonsim/svg.hpp"

namespace tendonsim {

namespace {

namespace fs = std::filesystem;

constexpr double kEnergyTolerance = 1e-8;
constexpr double kLinearityTolerance = 5e-3;
constexpr double kCorrelationTarget = 0.98;
constexpr double kRecoveryTolerance = 0.05;
constexpr double kOverallStiffnessTolerance = 1e-6;

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Context {
  const Scenario& sc;
  fs::path dir;
  RunResult& result;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> notes;
  std::string phase = "setup";

  void metric(const std::string& key, double value) { metrics.emplace_back(key, value); }
  void monitor(const std::string& name, bool passed, const std::string& detail) {
    result.monitors.push_back({name, passed, detail});
  }
  std::ofstream open(const std::string& file) {
    std::ofstream out(dir / file);
    if (!out) throw DomainError("cannot write '" + (dir / file).string() + "'");
    result.files.push_back(file);
    return out;
  }
  void plot(const std::string& file, const PlotSpec& spec) {
    if (!sc.plots) return;
    write_svg((dir / file).string(), spec);
    result.files.push_back(file);
  }
};

ProbeOptions probe_options(const Scenario& sc) {
  ProbeOptions options;
  options.l_n = sc.probe.l_n;
  options.continuation_steps = sc.probe.continuation_steps;
  return options;
}

double probe_displacement(const Scenario& sc) {
  return sc.probe.delta_x > 0.0 ? sc.probe.delta_x : default_probe_displacement(sc.robot);
}

double mean_angle_deg(const State& s) { return rad2deg(s.q.sum() / double(s.q.size())); }

void run_simulate(Context& cx) {
  const Scenario& sc = cx.sc;
  const RobotParams& robot = sc.robot;
  cx.phase = "integrate";
  const ControlSource source = sc.controller ? feedback(*sc.controller, robot) : constant_tensions(*sc.tensions, robot);
  const Eigen::VectorXd tau_ext = sc.tau_ext.value_or(Eigen::VectorXd());
  const Trajectory traj = integrate(sc.initial_state, source, robot, sc.dt, sc.duration, tau_ext);

  cx.phase = "write";
  {
    auto out = cx.open("trajectory.csv");
    write_trajectory_csv(out, traj);
  }

  cx.phase = "summarize";
  std::vector<double> t_plot, qbar_plot;
  double sum = 0.0, sum_sq = 0.0, tau2_min = 0.0;
  std::size_t window = 0, negative = 0;
  const double t_end = traj.t.back();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double qbar = mean_angle_deg(traj.states[i]);
    t_plot.push_back(traj.t[i]);
    qbar_plot.push_back(qbar);
    tau2_min = std::max(tau2_min, traj.tau2_min_required[i]);
    if ((traj.inputs[i].array() < 0.0).any()) ++negative;
    if (traj.t[i] >= 0.5 * sc.duration) {
      sum += qbar;
      sum_sq += qbar * qbar;
      ++window;
    }
  }
  const double mean = window ? sum / double(window) : std::nan("");
  const double sd = window ? std::sqrt(std::max(0.0, sum_sq / double(window) - mean * mean)) : std::nan("");
  cx.metric("t_end_s", t_end);
  cx.metric("final_mean_angle_deg", qbar_plot.back());
  cx.metric("steady_state_window_start_s", 0.5 * sc.duration);
  cx.metric("steady_state_mean_angle_deg", mean);
  cx.metric("steady_state_std_deg", sd);
  cx.metric("max_tau2_min_required_N", tau2_min);
  cx.metric("saturation_events", double(traj.count(EventKind::saturation)));
  cx.metric("max_lyapunov_increase", traj.max_lyapunov_increase());
  if (sc.controller) {
    const double target = rad2deg(sc.controller->theta_star);
    cx.metric("target_deg", target);
    cx.metric("steady_state_error_deg", mean - target);
    const ConvexityBound bound = convexity_bound(*sc.controller, robot);
    cx.notes.push_back(std::string("convexity regime: gamma ") +
                       (bound.satisfies_conservative ? "< alpha2 / n (convex for every target)"
                        : bound.satisfies_stated   ? "< alpha2 but >= alpha2 / n"
                                                   : ">= alpha2 (global convexity not guaranteed)"));
  }
  for (const Event& e : traj.events)
    if (e.kind != EventKind::saturation) cx.notes.push_back("event at t = " + g6(e.t) + " s: " + e.detail);

  const char* status = traj.status == TrajectoryStatus::completed          ? "completed"
                       : traj.status == TrajectoryStatus::left_feasible_set ? "left the feasible set"
                                                                             : "non-finite state";
  cx.monitor("trajectory_completed", traj.status == TrajectoryStatus::completed, status);

  const bool clamped = sc.controller && sc.controller->saturation == SaturationPolicy::clamp &&
                       traj.count(EventKind::saturation) > 0;
  if (clamped) {
    cx.monitor("energy_nonincreasing", true, "not applicable: clamped inputs break passivity");
  } else {
    const double scale = std::max(1.0, std::abs(traj.energies.front().v));
    const double rise = traj.max_lyapunov_increase();
    cx.monitor("energy_nonincreasing", rise <= kEnergyTolerance * scale, "max step increase " + g6(rise));
  }
  cx.monitor("tensions_nonnegative", negative == 0, std::to_string(negative) + " samples with u < 0");

  PlotSpec plot{sc.name + ": mean joint angle", "t (s)", "q_sum / n (deg)", {}};
  plot.series.push_back({t_plot, qbar_plot, "simulated", false});
  if (sc.controller)
    plot.series.push_back(
        {{t_plot.front(), t_plot.back()}, {rad2deg(sc.controller->theta_star), rad2deg(sc.controller->theta_star)},
         "target", false});
  cx.plot("mean_angle.svg", plot);
}

void stiffness_outputs(Context& cx, const StiffnessReport& report, const std::string& x_label) {
  {
    auto out = cx.open("stiffness.csv");
    write_stiffness_csv(out, report);
  }
  std::ostringstream block;
  write_summary(block, report);
  cx.notes.push_back(block.str());
  PlotSpec plot{cx.sc.name + ": transverse stiffness", x_label, "K (N/m)", {}};
  plot.series.push_back({report.sweep_values, report.stiffness_values, "probe", true});
  if (!report.sweep_values.empty()) {
    const double x0 = report.sweep_values.front(), x1 = report.sweep_values.back();
    plot.series.push_back({{x0, x1},
                           {report.fit_intercept + report.fit_slope * x0, report.fit_intercept + report.fit_slope * x1},
                           "affine fit", false});
  }
  cx.plot("stiffness.svg", plot);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

void run_probe(Context& cx) {
  const Scenario& sc = cx.sc;
  const int n = sc.robot.n;
  cx.phase = "probe";
  Eigen::VectorXd op;
  StaticLoad load;
  if (sc.controller) {
    op = sc.controller->target(n);
    load = closed_loop_load(*sc.controller, sc.robot);
  } else {
    op = Eigen::VectorXd::Zero(n);
    load = open_loop_load(*sc.tensions, sc.robot);
  }
  const double delta = probe_displacement(sc);
  const ProbeOptions options = probe_options(sc);
  const ProbeResult full = quasi_static_probe(op, delta, load, sc.robot, options);
  const ProbeResult half = quasi_static_probe(op, 0.5 * delta, load, sc.robot, options);

  StiffnessReport report;
  report.mode = sc.controller ? StiffnessMode::closed_loop_transverse : StiffnessMode::open_loop_probe;
  report.operating_point = sc.controller ? sc.controller->theta_star : 0.0;
  report.sweep_values = {0.5 * delta, delta};
  report.stiffness_values = {half.stiffness, full.stiffness};
  {
    auto out = cx.open("stiffness.csv");
    write_stiffness_csv(out, report);
  }
  cx.metric("delta_x_m", delta);
  cx.metric("stiffness_N_per_m", full.stiffness);
  cx.metric("stiffness_half_delta_N_per_m", half.stiffness);
  cx.metric("newton_iterations", full.iterations);
  if (sc.tensions) {
    const OpenLoopStiffness analytic = open_loop_stiffness_analytic((*sc.tensions)(0), sc.robot, sc.probe.l_n);
    cx.metric("analytic_stiffness_N_per_m", analytic.stiffness);
    cx.metric("analytic_slope_per_N", analytic.slope);
  }
  const double rel = std::abs(full.stiffness - half.stiffness) / std::max(std::abs(full.stiffness), 1e-300);
  cx.monitor("probe_linear", rel <= kLinearityTolerance, "K(delta) vs K(delta/2) relative difference " + g6(rel));
}

void run_sweep_mu(Context& cx) {
  const Scenario& sc = cx.sc;
  cx.phase = "sweep";
  const StiffnessReport report = open_loop_stiffness_sweep(sc.sweep_values, sc.robot, StiffnessMode::open_loop_probe,
                                                           probe_displacement(sc), probe_options(sc));
  const StiffnessReport analytic =
      open_loop_stiffness_sweep(sc.sweep_values, sc.robot, StiffnessMode::open_loop_analytic);
  cx.phase = "write";
  stiffness_outputs(cx, report, "mu (N)");
  cx.metric("kappa_slope", report.fit_slope);
  cx.metric("kappa_intercept", report.fit_intercept);
  cx.metric("correlation", report.correlation);
  cx.metric("analytic_slope", analytic.fit_slope);
  cx.metric("analytic_intercept", analytic.fit_intercept);
  cx.monitor("sweep_complete", !report.partial, report.partial ? report.failure : "all points solved");
  cx.monitor("stiffness_increasing", strictly_increasing(report.stiffness_values), "K strictly increasing in mu");
  cx.monitor("correlation_target", report.correlation >= kCorrelationTarget,
             "r = " + g6(report.correlation) + " (target >= 0.98)");
}

void run_sweep_gamma(Context& cx) {
  const Scenario& sc = cx.sc;
  cx.phase = "sweep";
  const StiffnessReport report = transverse_stiffness_sweep(*sc.controller, sc.sweep_values, sc.robot,
                                                            probe_displacement(sc), probe_options(sc));
  cx.phase = "write";
  stiffness_outputs(cx, report, "gamma (N.m/rad)");
  cx.metric("kappa1", report.fit_slope);
  cx.metric("kappa2", report.fit_intercept);
  cx.metric("correlation", report.correlation);
  cx.monitor("sweep_complete", !report.partial, report.partial ? report.failure : "all points solved");
  cx.monitor("kappa1_positive", report.fit_slope > 0.0, "kappa1 = " + g6(report.fit_slope));
  cx.monitor("correlation_target", report.correlation >= kCorrelationTarget,
             "r = " + g6(report.correlation) + " (target >= 0.98)");
}

double parameter_value(const RobotParams& p, IdentParameter which) {
  switch (which) {
    case IdentParameter::alpha1: return p.alpha1;
    case IdentParameter::alpha2: return p.alpha2;
    case IdentParameter::c1: return p.c1;
    case IdentParameter::c2: return p.c2;
  }
  return p.c1;
}

void run_identify(Context& cx, const RunOptions& options) {
  const Scenario& sc = cx.sc;
  const IdentifySettings& id = sc.identify;
  cx.phase = "dataset";
  std::vector<StaticSample> samples;
  if (!id.dataset_file.empty()) {
    fs::path path = id.dataset_file;
    if (path.is_relative() && !options.base_dir.empty()) path = fs::path(options.base_dir) / path;
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open dataset '" + path.string() + "'");
    samples = read_dataset_csv(in);
  } else {
    DatasetSpec spec;
    spec.thetas = id.thetas;
    spec.tau2 = id.tau2;
    spec.repeats = id.repeats;
    spec.noise = NoiseModel{id.noise_sigma, id.noise_relative, sc.seed};
    const StaticDataset data = generate_static_dataset(sc.robot, spec);
    samples = data.samples;
    cx.metric("rejected_samples", double(data.rejected.size()));
    for (const RejectedSample& r : data.rejected)
      cx.notes.push_back("rejected theta = " + g6(rad2deg(r.theta)) + " deg: tau2 = " + g6(r.tau2_requested) +
                         " N below the minimal pretension " + g6(r.tau2_min) + " N");
  }
  {
    auto out = cx.open("ident.csv");
    write_dataset_csv(out, samples);
  }
  cx.phase = "fit";
  const IdentAnchor anchor{id.anchor, parameter_value(sc.robot, id.anchor)};
  const IdentResult fit = fit_parameters(samples, sc.robot.n, anchor);
  cx.metric("samples", double(fit.samples));
  cx.metric("c1_hat", fit.c1_hat);
  cx.metric("c2_hat", fit.c2_hat);
  cx.metric("alpha1_hat", fit.alpha1_hat);
  cx.metric("alpha2_hat", fit.alpha2_hat);
  cx.metric("residual_rms", fit.residual_rms);
  cx.notes.push_back("anchor: " + std::string(to_string(anchor.parameter)) + " = " + g6(anchor.value));
  cx.monitor("sign_ok", fit.sign_ok, "alpha1 > 0, alpha2 > 0, c1 > 0, c2 < 0");
  if (!id.dataset_file.empty()) return;
  // Generated data: the robot parameters are the ground truth.
  const RobotParams& p = sc.robot;
  const std::pair<const char*, std::pair<double, double>> pairs[] = {{"c1", {fit.c1_hat, p.c1}},
                                                                     {"c2", {fit.c2_hat, p.c2}},
                                                                     {"alpha1", {fit.alpha1_hat, p.alpha1}},
                                                                     {"alpha2", {fit.alpha2_hat, p.alpha2}}};
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, v] : pairs) {
    const double e = std::abs(v.first - v.second) / std::abs(v.second);
    cx.metric(std::string(name) + "_relative_error", e);
    if (e >= worst) {
      worst = e;
      worst_name = name;
    }
  }
  cx.monitor("recovered_within_5pct", worst < kRecoveryTolerance,
             "largest relative error " + g6(worst) + " (" + worst_name + ")");
}

void run_equilibria(Context& cx) {
  const Scenario& sc = cx.sc;
  cx.phase = "equilibria";
  std::vector<double> thetas = sc.equilibria.thetas;
  if (thetas.empty())
    for (int i = 0; i < 100; ++i) thetas.push_back(deg2rad(-15.0 + 30.0 * double(i) / 99.0));

  auto out = cx.open("equilibria.csv");
  out << "theta_deg,tau1,tau2,u1,u2,residual_norm,assignable\n";
  auto row = [&](double theta_deg, const EquilibriumReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", theta_deg, r.tau1, r.tau2,
                  r.tau1 + r.tau2, r.tau2, r.residual_norm, r.assignable ? 1 : 0);
    out << buf;
  };
  std::size_t failed = 0;
  double max_tau2 = 0.0;
  for (double theta : thetas) {
    const EquilibriumReport r = homogeneous_membership(theta, sc.robot);
    row(rad2deg(theta), r);
    if (!(r.assignable && r.tensions_nonnegative)) ++failed;
    max_tau2 = std::max(max_tau2, r.tau2);
  }
  cx.metric("homogeneous_points", double(thetas.size()));
  cx.metric("max_minimal_pretension_N", max_tau2);
  cx.monitor("homogeneous_assignable", failed == 0,
             std::to_string(thetas.size() - failed) + " of " + std::to_string(thetas.size()) + " points assignable");

  for (std::size_t k = 0; k < sc.equilibria.targets.size(); ++k) {
    const Eigen::VectorXd& q = sc.equilibria.targets[k];
    const EquilibriumReport r = assignable_membership(q, sc.robot);
    std::ostringstream block;
    block << "target " << k << " (";
    for (Eigen::Index i = 0; i < q.size(); ++i) block << (i ? ", " : "") << g6(rad2deg(q(i)));
    block << " deg)\n";
    write_summary(block, r);
    cx.notes.push_back(block.str());
  }

  if (sc.controller) {
    const OverallStiffness k = overall_stiffness_matrix(*sc.controller, sc.robot);
    cx.metric("overall_stiffness_max_relative_difference", k.max_relative_difference);
    for (Eigen::Index i = 0; i < k.eigenvalues.size(); ++i)
      cx.metric("overall_stiffness_eigenvalue_" + std::to_string(i), k.eigenvalues(i));
    if (!k.discrepancy.empty()) cx.notes.push_back(k.discrepancy);
    cx.monitor("overall_stiffness_numeric", k.max_relative_difference <= kOverallStiffnessTolerance,
               "analytic vs finite differences " + g6(k.max_relative_difference));
  }
}

void write_summary_file(const Context& cx) {
  const RunResult& r = cx.result;
  std::ofstream out(cx.dir / "summary.txt");
  out << "scenario: " << cx.sc.name << '\n' << "mode: " << to_string(cx.sc.mode) << '\n';
  if (cx.sc.controller) {
    const ControllerSpec& c = *cx.sc.controller;
    out << "controller: theta_star_deg " << g6(rad2deg(c.theta_star)) << ", tau2_star " << g6(c.tau2_star)
        << ", gamma " << g6(c.gamma) << ", saturation " << to_string(c.saturation) << '\n';
  }
  for (const auto& [key, value] : cx.metrics) out << key << ": " << g6(value) << '\n';
  for (const std::string& note : cx.notes) {
    out << note;
    if (note.empty() || note.back() != '\n') out << '\n';
  }
  for (const Monitor& m : r.monitors)
    out << "monitor " << m.name << ": " << (m.passed ? "PASS" : "FAIL") << " (" << m.detail << ")\n";
  if (!r.failure_phase.empty()) out << "failed in phase " << r.failure_phase << ": " << r.failure << '\n';
  out << "status: " << (r.exit_status == 0 ? "PASS" : "FAIL") << '\n';
}

void write_result_json(const Context& cx) {
  const RunResult& r = cx.result;
  nlohmann::ordered_json j;
  j["scenario"] = cx.sc.name;
  j["mode"] = std::string(to_string(cx.sc.mode));
  j["exit_status"] = r.exit_status;
  j["failure_phase"] = r.failure_phase;
  j["failure"] = r.failure;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [key, value] : cx.metrics) {
    if (std::isfinite(value)) metrics[key] = value;
    else metrics[key] = nullptr;
  }
  j["metrics"] = metrics;
  j["monitors"] = nlohmann::ordered_json::array();
  for (const Monitor& m : r.monitors) j["monitors"].push_back({{"name", m.name}, {"passed", m.passed}, {"detail", m.detail}});
  j["files"] = r.files;
  std::ofstream(cx.dir / "result.json") << j.dump(2) << '\n';
}

}  // namespace

RunResult run(const Scenario& scenario, const RunOptions& options) {
  RunResult result;
  result.scenario = scenario.name;
  result.output_dir = options.output_dir.empty() ? scenario.outputs : options.output_dir;
  Context cx{scenario, fs::path(result.output_dir), result, {}, {}};
  try {
    fs::create_directories(cx.dir);
  } catch (const std::exception& e) {
    result.failure_phase = "setup";
    result.failure = e.what();
    return result;
  }
  try {
    switch (scenario.mode) {
      case ScenarioMode::simulate: run_simulate(cx); break;
      case ScenarioMode::probe: run_probe(cx); break;
      case ScenarioMode::sweep_mu: run_sweep_mu(cx); break;
      case ScenarioMode::sweep_gamma: run_sweep_gamma(cx); break;
      case ScenarioMode::identify: run_identify(cx, options); break;
      case ScenarioMode::equilibria: run_equilibria(cx); break;
    }
  } catch (const std::exception& e) {
    result.failure_phase = cx.phase;
    result.failure = e.what();
  }
  bool ok = result.failure_phase.empty();
  for (const Monitor& m : result.monitors) ok = ok && m.passed;
  result.exit_status = ok ? 0 : 1;
  result.files.push_back("summary.txt");
  result.files.push_back("result.json");
  write_summary_file(cx);
  write_result_json(cx);
  return result;
}

}  // namespace tendonsim
