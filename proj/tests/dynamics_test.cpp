#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tendonsim/dynamics.hpp"
#include "test_support.hpp"

namespace tendonsim {
namespace {

using test::random_q;

RobotParams undamped_desk() {
  RobotParams p = presets::desk_scale();
  p.d = 0.0;
  return p;
}

TEST(Energy, HamiltonianMatchesCholeskyOracle) {
  const RobotParams p;
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const State s{random_q(rng, p.n, 1.0), random_q(rng, p.n, 1e-3)};
    const Eigen::MatrixXd m = inertia_matrix(s.q, p);
    const Eigen::VectorXd w = m.llt().matrixL().solve(s.p);
    const double expected = 0.5 * w.squaredNorm() + total_potential(s.q, p);
    EXPECT_NEAR(hamiltonian(s, p), expected, 1e-12 * std::abs(expected));
  }
}

TEST(Energy, KineticGradientMatchesFiniteDifferences) {
  const RobotParams p;
  std::mt19937_64 rng(12);
  for (int k = 0; k < 50; ++k) {
    const State s{random_q(rng, p.n, 1.0), random_q(rng, p.n, 1e-3)};
    auto t = [&](const Eigen::VectorXd& q) { return kinetic_energy(State{q, s.p}, p); };
    const Eigen::VectorXd fd = test::central_gradient(t, s.q, 1e-5);
    EXPECT_LT(test::rel_error(kinetic_energy_gradient(s, p), fd), 1e-6);
  }
  EXPECT_TRUE(kinetic_energy_gradient(State::at_rest(Eigen::VectorXd::Constant(6, 0.1)), p).isZero(0.0));
}

TEST(Dynamics, StraightEquilibriumIsExact) {
  const RobotParams p;
  for (double mu : {0.0, 10.0, 45.0}) {
    const StateDerivative d = dynamics_rhs(State::at_rest(Eigen::VectorXd::Zero(6)), {mu, mu}, {}, p);
    EXPECT_TRUE(d.q_dot.isZero(0.0)) << mu;
    EXPECT_TRUE(d.p_dot.isZero(0.0)) << mu;
  }
}

TEST(Dynamics, HamiltonianFlowConservesEnergy) {
  const RobotParams p = undamped_desk();
  std::mt19937_64 rng(13);
  for (int k = 0; k < 50; ++k) {
    const State s{random_q(rng, p.n, 0.5), random_q(rng, p.n, 1e-3)};
    const StateDerivative d = dynamics_rhs(s, Eigen::Vector2d::Zero(), {}, p);
    const Eigen::VectorXd grad_q = potential_gradient(s.q, p) + kinetic_energy_gradient(s, p);
    const Eigen::VectorXd v = inertia_matrix(s.q, p).llt().solve(s.p);
    const double rate = grad_q.dot(d.q_dot) + v.dot(d.p_dot);
    EXPECT_LT(std::abs(rate), 1e-10 * std::max(1.0, grad_q.norm() * d.q_dot.norm()));
  }
}

TEST(Dynamics, RejectsNegativeTensionAndBadSizes) {
  const RobotParams p;
  const State s = State::at_rest(Eigen::VectorXd::Zero(6));
  EXPECT_THROW(dynamics_rhs(s, {-1.0, 0.0}, {}, p), DomainError);
  EXPECT_NO_THROW(dynamics_rhs(s, {-1.0, 0.0}, {}, p, false));
  EXPECT_THROW(dynamics_rhs(s, {1.0, 1.0}, Eigen::VectorXd::Zero(3), p), DomainError);
  EXPECT_THROW(constant_tensions({-1.0, 0.0}, p), DomainError);
}

TEST(Integrate, OpenLoopPassivity) {
  const RobotParams p = presets::desk_scale();
  std::mt19937_64 rng(14);
  for (int k = 0; k < 3; ++k) {
    const State s0 = State::at_rest(random_q(rng, p.n, 0.1));
    const Trajectory traj = integrate(s0, constant_tensions(Eigen::Vector2d::Zero(), p), p, 1e-3, 2.0);
    ASSERT_EQ(traj.status, TrajectoryStatus::completed);
    EXPECT_LE(traj.max_energy_increase(), 1e-9);
  }
}

TEST(Integrate, ConstantTensionShapedEnergy) {
  const RobotParams p = presets::desk_scale();
  const Trajectory traj = integrate(State::at_rest(Eigen::VectorXd::Constant(6, 0.02)),
                                    constant_tensions({1.5, 1.0}, p), p, 1e-3, 2.0);
  ASSERT_EQ(traj.status, TrajectoryStatus::completed);
  EXPECT_LE(traj.max_shaped_energy_increase(), 1e-9);
}

TEST(Integrate, FourthOrderConvergence) {
  const RobotParams p = undamped_desk();
  const State s0 = State::at_rest(Eigen::VectorXd::LinSpaced(6, -0.08, 0.1));
  const auto source = constant_tensions(Eigen::Vector2d::Zero(), p);
  const double dt = 4e-3, duration = 0.4;
  auto terminal = [&](double step) {
    const Trajectory t = integrate(s0, source, p, step, duration);
    Eigen::VectorXd x(12);
    x << t.states.back().q, t.states.back().p;
    return x;
  };
  const Eigen::VectorXd ref = terminal(dt / 16.0);
  const double coarse = (terminal(dt) - ref).norm();
  const double fine = (terminal(dt / 2.0) - ref).norm();
  const double ratio = coarse / fine;
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Integrate, BoundaryExitIsRecorded) {
  const RobotParams p = presets::desk_scale();
  State s0 = State::at_rest(Eigen::VectorXd::Constant(6, 1.5));
  const Trajectory traj = integrate(s0, constant_tensions({0.0, 0.0}, p), p, 1e-3, 5.0);
  EXPECT_EQ(traj.status, TrajectoryStatus::left_feasible_set);
  ASSERT_EQ(traj.count(EventKind::boundary), 1u);
  EXPECT_FALSE(in_feasible_set(traj.states.back().q));
  EXPECT_EQ(traj.event_flags(traj.size() - 1) & unsigned(EventKind::boundary), unsigned(EventKind::boundary));
}

TEST(Integrate, CsvHeaderAndDeterminism) {
  const RobotParams p = presets::desk_scale();
  const State s0 = State::at_rest(Eigen::VectorXd::Constant(6, 0.05));
  auto render = [&] {
    std::ostringstream out;
    write_trajectory_csv(out, integrate(s0, constant_tensions({1.0, 0.5}, p), p, 1e-3, 0.2));
    return out.str();
  };
  const std::string a = render();
  EXPECT_EQ(a, render());
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "t,q_1,q_2,q_3,q_4,q_5,q_6,p_1,p_2,p_3,p_4,p_5,p_6,u1,u2,H,H_d,V,event_flag");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 202);
  EXPECT_EQ(a.find("nan"), std::string::npos);
  EXPECT_EQ(a.find("inf"), std::string::npos);
}

TEST(Probe, LinearInDisplacement) {
  const RobotParams p = presets::stiff_spine();
  const StaticLoad load = open_loop_load({20.0, 20.0}, p);
  const double delta = default_probe_displacement(p);
  const ProbeResult full = quasi_static_probe(Eigen::VectorXd::Zero(6), delta, load, p);
  const ProbeResult half = quasi_static_probe(Eigen::VectorXd::Zero(6), 0.5 * delta, load, p);
  EXPECT_LT(std::abs(full.stiffness - half.stiffness) / full.stiffness, 5e-3);
  EXPECT_GT(full.stiffness, 0.0);
}

TEST(Probe, MatchesLinearResponseOracle) {
  // 1 / (J1 A^-1 J1^T) at the straight configuration, 40-digit oracle.
  const RobotParams p = presets::stiff_spine();
  const double delta = default_probe_displacement(p);
  const double k0 = quasi_static_probe(Eigen::VectorXd::Zero(6), delta, open_loop_load({0.0, 0.0}, p), p).stiffness;
  const double k45 = quasi_static_probe(Eigen::VectorXd::Zero(6), delta, open_loop_load({45.0, 45.0}, p), p).stiffness;
  EXPECT_NEAR(k0, 311.79079729421936394, 311.8 * 2e-3);
  EXPECT_NEAR(k45, 338.39607647158715561, 338.4 * 2e-3);
}

TEST(Probe, RejectsNonEquilibrium) {
  const RobotParams p = presets::stiff_spine();
  EXPECT_THROW(quasi_static_probe(Eigen::VectorXd::Zero(6), 1e-5, open_loop_load({5.0, 0.0}, p), p), DomainError);
  EXPECT_THROW(quasi_static_probe(Eigen::VectorXd::Zero(6), -1e-5, open_loop_load({1.0, 1.0}, p), p), DomainError);
}

}  // namespace
}  // namespace tendonsim
