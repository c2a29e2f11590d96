#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "tendonsim/model.hpp"

namespace tendonsim {

/// Tendon tensions produced by a control source at one instant.
struct ControlSample {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  bool saturated = false;
  double tau2_min_required = 0.0;
};

/// What drives the tendons during integration. `law` must be free of side
/// effects; events are derived from its samples by the integrator.
struct ControlSource {
  std::function<ControlSample(double, const State&)> law;
  /// Energy the loop is expected to dissipate (H_d). Falls back to H.
  std::function<double(const State&)> shaped_energy;
  /// Monitor-style sources may command negative tensions.
  bool allow_negative_tension = false;
  /// True when shaped_energy is nonincreasing along free motion.
  bool passive = false;
  std::string label;
};

ControlSource constant_tensions(const Eigen::Vector2d& u, const RobotParams& params);
ControlSource scripted_tensions(std::function<Eigen::Vector2d(double)> schedule);

double kinetic_energy(const State& state, const RobotParams& params);
double hamiltonian(const State& state, const RobotParams& params);

/// Gradient in q of (1/2) p^T M(q)^-1 p, with dM/dq_k by central differences.
Eigen::VectorXd kinetic_energy_gradient(const State& state, const RobotParams& params);

inline constexpr double kInertiaDifferenceStep = 1e-6;

struct StateDerivative {
  Eigen::VectorXd q_dot;
  Eigen::VectorXd p_dot;
};

/// Port-Hamiltonian vector field: q_dot = M^-1 p,
/// p_dot = -grad_q H - D M^-1 p + G(q) u + tau_ext.
StateDerivative dynamics_rhs(const State& state, const Eigen::Vector2d& u,
                             const Eigen::VectorXd& tau_ext, const RobotParams& params,
                             bool check_tension_sign = true);

enum class EventKind : std::uint8_t {
  saturation = 1,
  boundary = 2,
  non_finite = 4,
  solver_warning = 8,
};

struct Event {
  std::size_t index;
  double t;
  EventKind kind;
  std::string detail;
};

struct EnergySample {
  double h;
  double h_d;
  double v;
};

enum class TrajectoryStatus { completed, left_feasible_set, non_finite };

struct Trajectory {
  std::vector<double> t;
  std::vector<State> states;
  std::vector<Eigen::Vector2d> inputs;
  std::vector<EnergySample> energies;
  std::vector<double> tau2_min_required;
  std::vector<Event> events;
  TrajectoryStatus status = TrajectoryStatus::completed;

  std::size_t size() const { return t.size(); }
  std::size_t count(EventKind kind) const;
  /// Bitwise OR of the kinds of every event recorded at sample `index`.
  unsigned event_flags(std::size_t index) const;
  /// Largest sample-to-sample increase of the shaped energy (H_d).
  double max_shaped_energy_increase() const;
  /// Largest sample-to-sample increase of V = H_d - q^T tau_ext.
  double max_lyapunov_increase() const;
  /// Largest sample-to-sample increase of H.
  double max_energy_increase() const;
};

/// Classical fixed-step RK4 over [0, duration]; every step is recorded.
/// Leaving [-pi/2, pi/2] or producing a non-finite state ends the run early
/// with a matching event and status.
Trajectory integrate(const State& initial, const ControlSource& controls,
                     const RobotParams& params, double dt, double duration,
                     const Eigen::VectorXd& tau_ext = Eigen::VectorXd());

/// Columns: t, q_1..q_n, p_1..p_n, u1, u2, H, H_d, V, event_flag.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

// Quasi-static stiffness probing.

/// Static generalized force on the chain, as a function of q, together with
/// its Jacobian.
struct StaticLoad {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> force;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

/// -grad U(q) + G(q) u for constant tensions.
StaticLoad open_loop_load(const Eigen::Vector2d& u, const RobotParams& params);

struct ProbeOptions {
  double l_n = std::numeric_limits<double>::quiet_NaN();  // NaN selects ell (the tip)
  int continuation_steps = 2;
  int max_iterations = 50;
  double tolerance = 1e-10;
  double equilibrium_tolerance = 1e-9;
};

struct ProbeResult {
  double displacement;
  double reaction;
  double stiffness;
  Eigen::VectorXd q_bar;
  int iterations;
};

/// 1e-4 of the chain's unfolded length.
double default_probe_displacement(const RobotParams& params);

/// Pushes the contact point by delta_x along the transverse direction of the
/// last link at the operating point (a fixed world direction) and solves
/// force(q) + J1(q)^T f = 0 together with the displacement constraint by
/// Newton continuation. Returns f / delta_x.
ProbeResult quasi_static_probe(const Eigen::VectorXd& operating_point, double delta_x,
                               const StaticLoad& load, const RobotParams& params,
                               const ProbeOptions& options = {});

}  // namespace tendonsim
