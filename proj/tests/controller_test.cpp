#include <gtest/gtest.h>

#include <random>

#include "tendonsim/controller.hpp"
#include "test_support.hpp"

namespace tendonsim {
namespace {

using test::random_q;

ControllerSpec spec_for(const RobotParams& p, double theta_deg, double tau2, double gamma, double kd = 1.0,
                        SaturationPolicy policy = SaturationPolicy::monitor) {
  return ControllerSpec::with_scalar_damping(p.n, deg2rad(theta_deg), tau2, gamma, kd, policy);
}

State random_state(std::mt19937_64& rng, int n) {
  return State{random_q(rng, n, kPi<double> / 12.0), random_q(rng, n, 1e-3)};
}

TEST(InputTransform, RoundTrip) {
  const Eigen::Vector2d u(3.0, 1.25);
  EXPECT_EQ(input_transform(u), Eigen::Vector2d(1.75, 1.25));
  EXPECT_EQ(input_transform_inverse(input_transform(u)), u);
}

TEST(DesiredPotential, DerivativesMatchFiniteDifferences) {
  const RobotParams p = presets::convex_synthetic();
  const ControllerSpec spec = spec_for(p, 5.0, 1.0, 0.05);
  std::mt19937_64 rng(21);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd q = random_q(rng, p.n, 0.3);
    auto ud = [&](const Eigen::VectorXd& x) { return desired_potential(x, spec, p); };
    EXPECT_LT(test::rel_error(test::central_gradient(ud, q), desired_potential_gradient(q, spec, p)), 1e-7);
    Eigen::MatrixXd fd(p.n, p.n);
    for (int j = 0; j < p.n; ++j) {
      Eigen::VectorXd a = q, b = q;
      a(j) += 1e-6;
      b(j) -= 1e-6;
      fd.col(j) = (desired_potential_gradient(a, spec, p) - desired_potential_gradient(b, spec, p)) / 2e-6;
    }
    EXPECT_LT(test::rel_error(fd, desired_potential_hessian(q, spec, p)), 1e-7);
  }
  EXPECT_TRUE(desired_potential_gradient(spec.target(p.n), spec, p).isZero(0.0));
}

TEST(ControlLaw, ClosedLoopStructure) {
  // -grad U + G u = -grad U_d - 1 1^T K_d M^-1 p at every state.
  const RobotParams p;
  std::mt19937_64 rng(22);
  Eigen::MatrixXd kd = Eigen::MatrixXd::Identity(6, 6);
  kd(0, 1) = kd(1, 0) = 0.3;
  for (int k = 0; k < 1000; ++k) {
    ControllerSpec spec = spec_for(p, 4.0, 5.0, 0.1);
    spec.kd = kd;
    const State s = random_state(rng, p.n);
    const ControlOutput out = control_law(s, spec, p);
    const Eigen::VectorXd v = inertia_matrix(s.q, p).llt().solve(s.p);
    const Eigen::VectorXd lhs = -potential_gradient(s.q, p) + tendon_torque(s.q, out.u, p);
    const Eigen::VectorXd rhs = -desired_potential_gradient(s.q, spec, p) -
                                Eigen::VectorXd::Constant(p.n, (kd * v).sum());
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ControlLaw, PretensionIsInvisibleToTheChain) {
  const RobotParams p;
  std::mt19937_64 rng(23);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const State s = random_state(rng, p.n);
    const Eigen::VectorXd base = closed_loop_tendon_torque(s, spec_for(p, 5.0, 0.0, 0.1), p);
    for (double tau2 : {5.0, 20.0})
      worst = std::max(worst, (closed_loop_tendon_torque(s, spec_for(p, 5.0, tau2, 0.1), p) - base).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(ControlLaw, SecondTensionEqualsPretension) {
  const RobotParams p;
  std::mt19937_64 rng(24);
  for (int k = 0; k < 200; ++k) {
    const ControlOutput out = control_law(random_state(rng, p.n), spec_for(p, 5.0, 7.5, 0.1), p);
    EXPECT_EQ(out.u(1), 7.5);
    EXPECT_LT((out.tau - (out.tau_st + out.tau_es + out.tau_da)).norm(), 1e-15);
  }
}

TEST(ControlLaw, MinimalPretensionKeepsTensionsNonnegative) {
  const RobotParams p;
  std::mt19937_64 rng(25);
  for (int k = 0; k < 500; ++k) {
    const State s = random_state(rng, p.n);
    const double bound = control_law(s, spec_for(p, 5.0, 0.0, 0.1), p).tau2_min_required;
    ASSERT_TRUE(std::isfinite(bound));
    const ControlOutput at = control_law(s, spec_for(p, 5.0, bound, 0.1), p);
    EXPECT_GE(at.u(0), -1e-12 * std::max(1.0, bound));
    const ControlOutput above = control_law(s, spec_for(p, 5.0, bound * 1.01 + 1e-9, 0.1), p);
    EXPECT_GE(above.u(0), 0.0);
    EXPECT_FALSE(above.saturated);
    if (bound > 1e-9) {
      const ControlOutput below = control_law(s, spec_for(p, 5.0, 0.5 * bound, 0.1), p);
      EXPECT_LT(below.u(0), 0.0);
    }
  }
}

TEST(ControlLaw, SaturationPolicies) {
  const RobotParams p;
  // Well below a 5 deg target at zero pretension u1 goes negative.
  const State s = State::at_rest(Eigen::VectorXd::Constant(6, deg2rad(-12.0)));
  const ControlOutput mon = control_law(s, spec_for(p, 5.0, 0.0, 0.1, 1.0, SaturationPolicy::monitor), p);
  ASSERT_LT(mon.u(0), 0.0);
  EXPECT_TRUE(mon.saturated);
  const ControlOutput clamp = control_law(s, spec_for(p, 5.0, 0.0, 0.1, 1.0, SaturationPolicy::clamp), p);
  EXPECT_TRUE(clamp.saturated);
  EXPECT_EQ(clamp.u(0), 0.0);
  EXPECT_THROW(control_law(s, spec_for(p, 5.0, 0.0, 0.1, 1.0, SaturationPolicy::strict), p), SaturationViolation);
  EXPECT_EQ(saturation_policy_from_string("strict"), SaturationPolicy::strict);
  EXPECT_THROW(saturation_policy_from_string("soft"), DomainError);
}

TEST(Matching, ResidualVanishesForHomogeneousTargets) {
  const RobotParams p;
  std::mt19937_64 rng(26);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const ControllerSpec spec = spec_for(p, -15.0 + 3.0 * t, 1.0, 0.1);
    for (int k = 0; k < 1000; ++k)
      worst = std::max(worst, matching_residual(random_q(rng, p.n, kHalfPi<double>), spec, p).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-12);
  const Eigen::MatrixXd a = differencing_annihilator(6);
  EXPECT_TRUE((a * Eigen::VectorXd::Ones(6)).isZero(0.0));
  EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(a).rank(), 5);
}

TEST(ControllerSpec, Validation) {
  const RobotParams p;
  EXPECT_NO_THROW(validate(spec_for(p, 5.0, 1.0, 0.1), p));
  try {
    validate(spec_for(p, 5.0, 1.0, -1.0), p);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma > 0"), std::string::npos);
  }
  EXPECT_THROW(validate(spec_for(p, 5.0, -1.0, 0.1), p), DomainError);
  EXPECT_THROW(validate(spec_for(p, 5.0, 1.0, 0.1, -1.0), p), DomainError);
  ControllerSpec bad = spec_for(p, 5.0, 1.0, 0.1);
  bad.kd(0, 1) = 0.5;
  EXPECT_THROW(validate(bad, p), DomainError);
  bad.kd = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(validate(bad, p), DomainError);
}

TEST(ControllerSpec, ConvexityRegime) {
  const RobotParams p = presets::convex_synthetic();
  const ConvexityBound b = convexity_bound(spec_for(p, 5.0, 1.0, 0.05), p);
  EXPECT_DOUBLE_EQ(b.conservative, 0.1);
  EXPECT_TRUE(b.satisfies_conservative);
  EXPECT_FALSE(convexity_bound(spec_for(p, 5.0, 1.0, 0.3), p).satisfies_conservative);
  EXPECT_TRUE(convexity_bound(spec_for(p, 5.0, 1.0, 0.3), p).satisfies_stated);
}

TEST(ClosedLoop, ShapedEnergyDecreases) {
  const RobotParams p = presets::convex_synthetic();
  const ControllerSpec spec = spec_for(p, 5.0, 5.0, 0.05, 1.0, SaturationPolicy::clamp);
  const State s0 = State::at_rest(Eigen::VectorXd::LinSpaced(6, 0.06, 0.1));
  const Trajectory traj = integrate(s0, feedback(spec, p), p, 3e-5, 0.5);
  ASSERT_EQ(traj.status, TrajectoryStatus::completed);
  EXPECT_EQ(traj.count(EventKind::saturation), 0u);
  EXPECT_LE(traj.max_shaped_energy_increase(), 1e-8);
  EXPECT_LT(traj.energies.back().h_d, traj.energies.front().h_d);
}

TEST(ClosedLoop, ConstantLoadLyapunov) {
  const RobotParams p = presets::convex_synthetic();
  const ControllerSpec spec = spec_for(p, 5.0, 5.0, 0.05, 0.01, SaturationPolicy::clamp);
  const Eigen::VectorXd tau_ext = Eigen::VectorXd::LinSpaced(6, -0.002, 0.003);
  const Trajectory traj = integrate(State::at_rest(spec.target(6)), feedback(spec, p), p, 5e-4, 1.0, tau_ext);
  ASSERT_EQ(traj.status, TrajectoryStatus::completed);
  EXPECT_LE(traj.max_lyapunov_increase(), 1e-8);
}

}  // namespace
}  // namespace tendonsim
