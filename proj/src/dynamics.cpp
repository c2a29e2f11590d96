#include "tendonsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

namespace tendonsim {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_inertia(const Eigen::VectorXd& q, const RobotParams& params) {
  Eigen::LLT<Eigen::MatrixXd> llt(inertia_matrix(q, params));
  if (llt.info() != Eigen::Success) throw std::logic_error("inertia matrix lost positive definiteness");
  return llt;
}

Eigen::VectorXd zero_if_empty(const Eigen::VectorXd& tau_ext, Eigen::Index n) {
  if (tau_ext.size() == 0) return Eigen::VectorXd::Zero(n);
  if (tau_ext.size() != n) throw DomainError("tau_ext must have n entries");
  if (!tau_ext.allFinite()) throw DomainError("tau_ext: non-finite entry");
  return tau_ext;
}

double max_increase(const std::vector<EnergySample>& e, double EnergySample::*field) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < e.size(); ++k) worst = std::max(worst, e[k].*field - e[k - 1].*field);
  return e.size() < 2 ? 0.0 : worst;
}

}  // namespace

ControlSource constant_tensions(const Eigen::Vector2d& u, const RobotParams& params) {
  if (!u.allFinite() || (u.array() < 0.0).any())
    throw DomainError("constant tensions must be finite and nonnegative");
  ControlSource source;
  source.law = [u](double, const State&) { return ControlSample{u, false, 0.0}; };
  // Constant tensions do work W(q) with grad W = G u; H - W is conserved
  // without damping.
  source.shaped_energy = [u, params](const State& s) {
    return hamiltonian(s, params) - input_work_potential(s.q, u, params);
  };
  source.passive = true;
  source.label = "constant";
  return source;
}

ControlSource scripted_tensions(std::function<Eigen::Vector2d(double)> schedule) {
  ControlSource source;
  source.law = [schedule = std::move(schedule)](double t, const State&) {
    const Eigen::Vector2d u = schedule(t);
    return ControlSample{u, false, 0.0};
  };
  source.label = "scripted";
  return source;
}

double kinetic_energy(const State& state, const RobotParams& params) {
  const auto llt = factor_inertia(state.q, params);
  return 0.5 * state.p.dot(llt.solve(state.p));
}

double hamiltonian(const State& state, const RobotParams& params) {
  return kinetic_energy(state, params) + total_potential(state.q, params);
}

namespace {

Eigen::VectorXd kinetic_gradient_with(const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                                      const RobotParams& params) {
  // d/dq_k (1/2 p^T M^-1 p) = -(1/2) v^T (dM/dq_k) v with v = M^-1 p. The
  // central difference of M is contracted with v before it is formed, which
  // is the same difference quotient at O(n) cost per column.
  const Eigen::Index n = q.size();
  Eigen::VectorXd grad(n);
  const double h = kInertiaDifferenceStep;
  Eigen::VectorXd qp = q;
  Eigen::VectorXd qm = q;
  for (Eigen::Index k = 0; k < n; ++k) {
    qp(k) = q(k) + h;
    qm(k) = q(k) - h;
    grad(k) = -(kinetic_coenergy(qp, v, params) - kinetic_coenergy(qm, v, params)) / (2.0 * h);
    qp(k) = q(k);
    qm(k) = q(k);
  }
  return grad;
}

}  // namespace

Eigen::VectorXd kinetic_energy_gradient(const State& state, const RobotParams& params) {
  const auto llt = factor_inertia(state.q, params);
  const Eigen::VectorXd v = llt.solve(state.p);
  if (v.isZero(0.0)) return Eigen::VectorXd::Zero(state.q.size());
  return kinetic_gradient_with(state.q, v, params);
}

StateDerivative dynamics_rhs(const State& state, const Eigen::Vector2d& u,
                             const Eigen::VectorXd& tau_ext, const RobotParams& params,
                             bool check_tension_sign) {
  if (!u.allFinite()) throw DomainError("dynamics_rhs: non-finite tension");
  if (check_tension_sign && (u.array() < 0.0).any())
    throw DomainError("dynamics_rhs: tendon tensions must be nonnegative");
  if (!is_finite(state)) throw DomainError("dynamics_rhs: non-finite state");
  const Eigen::Index n = state.q.size();
  if (state.p.size() != n) throw DomainError("dynamics_rhs: q and p sizes differ");

  const auto llt = factor_inertia(state.q, params);
  const Eigen::VectorXd v = llt.solve(state.p);

  StateDerivative out;
  out.q_dot = v;
  out.p_dot = -potential_gradient(state.q, params) - params.d * v +
              tendon_torque(state.q, u, params) + zero_if_empty(tau_ext, n);
  if (!v.isZero(0.0)) out.p_dot -= kinetic_gradient_with(state.q, v, params);
  return out;
}

std::size_t Trajectory::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [kind](const Event& e) { return e.kind == kind; }));
}

unsigned Trajectory::event_flags(std::size_t index) const {
  unsigned flags = 0;
  for (const Event& e : events)
    if (e.index == index) flags |= static_cast<unsigned>(e.kind);
  return flags;
}

double Trajectory::max_shaped_energy_increase() const { return max_increase(energies, &EnergySample::h_d); }
double Trajectory::max_lyapunov_increase() const { return max_increase(energies, &EnergySample::v); }
double Trajectory::max_energy_increase() const { return max_increase(energies, &EnergySample::h); }

Trajectory integrate(const State& initial, const ControlSource& controls,
                     const RobotParams& params, double dt, double duration,
                     const Eigen::VectorXd& tau_ext) {
  validate(params);
  validate(initial, params.n);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrate: dt must be positive");
  if (!(duration >= dt) || !std::isfinite(duration)) throw DomainError("integrate: T must be >= dt");
  if (!controls.law) throw DomainError("integrate: control source has no law");
  const Eigen::Index n = params.n;
  const Eigen::VectorXd load = zero_if_empty(tau_ext, n);
  const bool check_sign = !controls.allow_negative_tension;

  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  Trajectory traj;
  traj.t.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);
  traj.energies.reserve(steps + 1);
  traj.tau2_min_required.reserve(steps + 1);

  auto record = [&](double t, const State& s) {
    const std::size_t index = traj.t.size();
    const ControlSample sample = controls.law(t, s);
    const double h = hamiltonian(s, params);
    const double h_d = controls.shaped_energy ? controls.shaped_energy(s) : h;
    traj.t.push_back(t);
    traj.states.push_back(s);
    traj.inputs.push_back(sample.u);
    traj.energies.push_back({h, h_d, h_d - s.q.dot(load)});
    traj.tau2_min_required.push_back(sample.tau2_min_required);
    if (sample.saturated) traj.events.push_back({index, t, EventKind::saturation, "tension saturated"});
  };

  auto field = [&](double t, const State& s) {
    const ControlSample sample = controls.law(t, s);
    return dynamics_rhs(s, sample.u, load, params, check_sign);
  };

  State x = initial;
  record(0.0, x);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t0 = double(k - 1) * dt;
    const double t1 = double(k) * dt;
    StateDerivative k1, k2, k3, k4;
    try {
      k1 = field(t0, x);
      k2 = field(t0 + 0.5 * dt, State{x.q + 0.5 * dt * k1.q_dot, x.p + 0.5 * dt * k1.p_dot});
      k3 = field(t0 + 0.5 * dt, State{x.q + 0.5 * dt * k2.q_dot, x.p + 0.5 * dt * k2.p_dot});
      k4 = field(t1, State{x.q + dt * k3.q_dot, x.p + dt * k3.p_dot});
    } catch (const DomainError& e) {
      traj.events.push_back({traj.t.size() - 1, t0, EventKind::non_finite, e.what()});
      traj.status = TrajectoryStatus::non_finite;
      return traj;
    }
    State next{x.q + dt / 6.0 * (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot),
               x.p + dt / 6.0 * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot)};
    if (!is_finite(next)) {
      traj.events.push_back({traj.t.size() - 1, t1, EventKind::non_finite, "state became non-finite"});
      traj.status = TrajectoryStatus::non_finite;
      return traj;
    }
    x = std::move(next);
    if (!in_feasible_set(x.q)) {
      // The offending sample is kept so the exit is visible in the record.
      traj.t.push_back(t1);
      traj.states.push_back(x);
      traj.inputs.push_back(traj.inputs.back());
      traj.energies.push_back(traj.energies.back());
      traj.tau2_min_required.push_back(traj.tau2_min_required.back());
      traj.events.push_back({traj.t.size() - 1, t1, EventKind::boundary, "joint angle left [-pi/2, pi/2]"});
      traj.status = TrajectoryStatus::left_feasible_set;
      return traj;
    }
    record(t1, x);
  }
  return traj;
}

namespace {

void put(std::ostream& out, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  out << buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const Eigen::Index n = trajectory.states.empty() ? 0 : trajectory.states.front().q.size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",q_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",p_" << i;
  out << ",u1,u2,H,H_d,V,event_flag\n";
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    put(out, trajectory.t[k]);
    const State& s = trajectory.states[k];
    for (Eigen::Index i = 0; i < n; ++i) { out << ','; put(out, s.q(i)); }
    for (Eigen::Index i = 0; i < n; ++i) { out << ','; put(out, s.p(i)); }
    for (double v : {trajectory.inputs[k](0), trajectory.inputs[k](1), trajectory.energies[k].h,
                     trajectory.energies[k].h_d, trajectory.energies[k].v}) {
      out << ',';
      put(out, v);
    }
    out << ',' << trajectory.event_flags(k) << '\n';
  }
}

StaticLoad open_loop_load(const Eigen::Vector2d& u, const RobotParams& params) {
  StaticLoad load;
  load.force = [u, params](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    return -potential_gradient(q, params) + tendon_torque(q, u, params);
  };
  load.jacobian = [u, params](const Eigen::VectorXd& q) -> Eigen::MatrixXd {
    // d(G u)/dq: G1 u1 + G2 u2 = c1 (u1 - u2) 1 + g1 (u1 + u2) 1.
    return -potential_hessian(q, params) + 0.5 * (u(0) + u(1)) * input_matrix_sum_jacobian(q, params);
  };
  return load;
}

double default_probe_displacement(const RobotParams& params) {
  return 1e-4 * (params.ell + 2.0 * params.n * params.ell);
}

ProbeResult quasi_static_probe(const Eigen::VectorXd& operating_point, double delta_x,
                               const StaticLoad& load, const RobotParams& params,
                               const ProbeOptions& options) {
  validate(params);
  if (operating_point.size() != params.n) throw DomainError("probe: operating point must have n entries");
  if (!in_feasible_set(operating_point)) throw DomainError("probe: operating point outside the feasible set");
  if (!(delta_x > 0.0) || !std::isfinite(delta_x)) throw DomainError("probe: delta_x must be positive");
  if (options.continuation_steps < 1) throw DomainError("probe: continuation_steps >= 1");

  const double l_n = std::isnan(options.l_n) ? params.ell : options.l_n;
  const double lever = contact_lever(params, l_n);
  const Eigen::Index n = operating_point.size();
  const double imbalance = load.force(operating_point).cwiseAbs().maxCoeff();
  if (imbalance > options.equilibrium_tolerance)
    throw DomainError("probe: operating point is not an equilibrium (residual " +
                      std::to_string(imbalance) + ")");

  // Fixed world direction of the push: the last link's transverse axis at the
  // operating point.
  const double s_op = operating_point.sum();
  const Eigen::Vector2d dir(std::cos(s_op), -std::sin(s_op));
  const Eigen::Vector2d contact_op = point_on_link(operating_point, params, n - 1, lever);

  auto j1 = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    return (dir.transpose() * point_jacobian(q, params, n - 1, lever)).transpose();
  };

  Eigen::VectorXd q = operating_point;
  double f = 0.0;
  int total_iterations = 0;
  for (int step = 1; step <= options.continuation_steps; ++step) {
    const double target = delta_x * double(step) / double(options.continuation_steps);
    auto residual = [&](const Eigen::VectorXd& qq, double ff) {
      Eigen::VectorXd r(n + 1);
      r.head(n) = load.force(qq) + j1(qq) * ff;
      r(n) = dir.dot(point_on_link(qq, params, n - 1, lever) - contact_op) - target;
      return r;
    };
    Eigen::VectorXd r = residual(q, f);
    int it = 0;
    while (r.cwiseAbs().maxCoeff() > options.tolerance) {
      if (it == options.max_iterations)
        throw SolverError("quasi_static_probe: Newton did not converge", r.cwiseAbs().maxCoeff(), it);
      // Jacobian of J1(q)^T f is f times the Hessian of the pushed coordinate;
      // J1 is smooth so central differences are adequate.
      Eigen::MatrixXd curvature(n, n);
      const double h = 1e-7;
      for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd qp = q, qm = q;
        qp(k) += h;
        qm(k) -= h;
        curvature.col(k) = (j1(qp) - j1(qm)) / (2.0 * h);
      }
      const Eigen::VectorXd grad = j1(q);
      Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n + 1, n + 1);
      jac.topLeftCorner(n, n) = load.jacobian(q) + f * curvature;
      jac.topRightCorner(n, 1) = grad;
      jac.bottomLeftCorner(1, n) = grad.transpose();
      const Eigen::VectorXd delta = jac.fullPivLu().solve(-r);
      if (!delta.allFinite())
        throw SolverError("quasi_static_probe: singular Newton system", r.cwiseAbs().maxCoeff(), it);
      q += delta.head(n);
      f += delta(n);
      r = residual(q, f);
      ++it;
    }
    total_iterations += it;
  }
  return ProbeResult{delta_x, f, f / delta_x, q, total_iterations};
}

}  // namespace tendonsim
