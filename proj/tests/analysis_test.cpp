#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tendonsim/analysis.hpp"
#include "test_support.hpp"

namespace tendonsim {
namespace {

using test::random_q;

TEST(Annihilator, OrthonormalComplement) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd g = random_q(rng, 6, 2.0);
    const Eigen::MatrixXd a = orthogonal_annihilator(g);
    ASSERT_EQ(a.rows(), 5);
    EXPECT_LT((a * g).cwiseAbs().maxCoeff(), 1e-14 * g.norm());
    EXPECT_LT((a * a.transpose() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(a).rank(), 5);
  }
}

TEST(PseudoInverse, PenroseConditions) {
  Eigen::MatrixXd a(2, 6);
  a << 1, 2, 3, 4, 5, 6, 0, 0, 0, 0, 0, 0;  // rank one, like the straight tip Jacobian
  const Eigen::MatrixXd pinv = pseudo_inverse(a);
  EXPECT_LT((a * pinv * a - a).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((pinv * a * pinv - pinv).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Membership, HomogeneousGrid) {
  const RobotParams p;
  for (int i = 0; i < 100; ++i) {
    const double theta = -kPi<double> / 12.0 + kPi<double> / 6.0 * i / 99.0;
    const EquilibriumReport r = homogeneous_membership(theta, p);
    EXPECT_TRUE(r.assignable) << theta;
    EXPECT_TRUE(r.tensions_nonnegative) << theta;
    EXPECT_GE(r.tau1 + r.tau2, 0.0);
    // The split holds the angle: G_N tau1 + 2 g1 tau2 = tau_N.
    const double g1 = p.c2 * std::sin(theta);
    EXPECT_NEAR((p.c1 + g1) * r.tau1 + 2.0 * g1 * r.tau2, p.alpha1 * std::sin(6 * theta) + p.alpha2 * theta, 1e-12);
    EXPECT_NEAR(r.tau2, minimal_pretension(theta, p), 1e-15);
  }
}

TEST(Membership, HomogeneousWithGivenPretension) {
  const RobotParams p;
  const EquilibriumReport r = homogeneous_membership(deg2rad(5.0), p, 10.0);
  EXPECT_EQ(r.tau2, 10.0);
  EXPECT_TRUE(r.tensions_nonnegative);
  EXPECT_THROW(homogeneous_membership(deg2rad(5.0), p, -1.0), DomainError);
}

TEST(Membership, NonHomogeneousTargetFailsMatching) {
  const RobotParams p;
  Eigen::VectorXd q(6);
  q << 0.02, 0.04, 0.06, 0.08, 0.06, 0.04;
  const EquilibriumReport r = assignable_membership(q, p);
  EXPECT_FALSE(r.assignable);
  EXPECT_GT(r.residual_norm, 0.0);
  EXPECT_EQ(r.reason, "matching condition");
  const EquilibriumReport h = assignable_membership(Eigen::VectorXd::Constant(6, 0.05), p);
  EXPECT_TRUE(h.assignable);
}

TEST(Membership, GeneralColumns) {
  const int n = 4;
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g0(n), g1(n);
  g0 << 1.0, 0.5, -0.2, 0.3;
  g1 << 0.1, -0.4, 0.2, 0.6;
  // grad U inside the span with tau1 = 2, tau2 = 0.5.
  const Eigen::VectorXd grad = (g0 + g1) * 2.0 + 2.0 * g1 * 0.5;
  const EquilibriumReport ok = assignable_membership_general(q, grad, g0, g1);
  EXPECT_TRUE(ok.assignable);
  EXPECT_EQ(ok.reason, "assignable");
  EXPECT_NEAR(ok.tau1, 2.0, 1e-12);
  EXPECT_NEAR(ok.tau2, 0.5, 1e-12);
  // Same span, negative pretension.
  const Eigen::VectorXd pushing = (g0 + g1) * 2.0 - 2.0 * g1 * 0.5;
  const EquilibriumReport sign = assignable_membership_general(q, pushing, g0, g1);
  EXPECT_FALSE(sign.assignable);
  EXPECT_EQ(sign.reason, "tension sign");
  // Outside the span.
  Eigen::VectorXd off = grad;
  off(0) += 0.1;
  EXPECT_EQ(assignable_membership_general(q, off, g0, g1).reason, "matching condition");
  // g1 = 0.
  const EquilibriumReport straight = assignable_membership_general(q, g0 * 3.0, g0, Eigen::VectorXd::Zero(n));
  EXPECT_TRUE(straight.assignable);
  EXPECT_EQ(straight.reason, "g1 vanishes");
}

TEST(Membership, ModelColumnsAreParallel) {
  const RobotParams p;
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(6, 0.1);
  const auto g = input_matrix(q, p);
  const Eigen::VectorXd g0 = Eigen::VectorXd::Constant(6, p.c1);
  const Eigen::VectorXd g1 = Eigen::VectorXd::Constant(6, g.g1_scalar);
  const EquilibriumReport general = assignable_membership_general(q, g0, g1, p);
  const EquilibriumReport direct = assignable_membership(q, p);
  EXPECT_EQ(general.assignable, direct.assignable);
  EXPECT_NEAR(general.tau1, direct.tau1, 1e-14);
  EXPECT_NEAR(general.tau2, direct.tau2, 1e-14);
}

TEST(OverallStiffness, AnalyticMatchesNumeric) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> gamma(0.01, 1.0), alpha2(0.001, 2.0), theta(-0.25, 0.25);
  for (int k = 0; k < 20; ++k) {
    RobotParams p;
    p.alpha2 = alpha2(rng);
    const ControllerSpec spec = ControllerSpec::with_scalar_damping(6, theta(rng), 1.0, gamma(rng), 1.0);
    const OverallStiffness s = overall_stiffness_matrix(spec, p);
    EXPECT_LE(s.max_relative_difference, 1e-6);
    EXPECT_LT((s.eigenvalues - s.expected_eigenvalues).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(OverallStiffness, ReportsPrintedFormDiscrepancy) {
  const RobotParams p = presets::convex_synthetic();
  const OverallStiffness s =
      overall_stiffness_matrix(ControllerSpec::with_scalar_damping(6, deg2rad(5.0), 1.0, 0.05, 1.0), p);
  EXPECT_NEAR(s.expected_eigenvalues(5), 0.6 + 6 * 0.05, 1e-15);
  EXPECT_NEAR(s.printed_eigenvalues(5), 0.65, 1e-15);
  EXPECT_NE(s.discrepancy.find("factor of n"), std::string::npos);
}

TEST(ShiftedEquilibrium, RecoversConstructedOffsets) {
  const RobotParams p = presets::convex_synthetic();
  const ControllerSpec spec = ControllerSpec::with_scalar_damping(6, deg2rad(5.0), 5.0, 0.05, 1.0);
  std::mt19937_64 rng(33);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd chosen = spec.target(6) + random_q(rng, 6, deg2rad(0.5));
    const Eigen::VectorXd tau_ext = desired_potential_gradient(chosen, spec, p);
    const EquilibriumReport r = shifted_equilibrium(tau_ext, spec, p);
    EXPECT_LT((r.q_bar - chosen).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(OpenLoopStiffness, AnalyticMatchesProbe) {
  const RobotParams p = presets::stiff_spine();
  std::vector<double> mus;
  for (int i = 0; i <= 9; ++i) mus.push_back(5.0 * i);
  const StiffnessReport probe = open_loop_stiffness_sweep(mus, p);
  const StiffnessReport analytic = open_loop_stiffness_sweep(mus, p, StiffnessMode::open_loop_analytic);
  ASSERT_FALSE(probe.partial);
  for (std::size_t i = 0; i < mus.size(); ++i)
    EXPECT_LT(std::abs(analytic.stiffness_values[i] - probe.stiffness_values[i]) / probe.stiffness_values[i], 0.01);
  EXPECT_LT(secant_deviation(analytic.sweep_values, analytic.stiffness_values), 1e-9);
  EXPECT_LT(secant_deviation(probe.sweep_values, probe.stiffness_values), 0.01);
  EXPECT_GT(probe.correlation, 0.98);
  EXPECT_TRUE(open_loop_stiffness_analytic(10.0, p).stiffening);
  EXPECT_GT(open_loop_stiffness_analytic(10.0, p).slope, 0.0);
}

TEST(ClosedLoopStiffness, AffineInGamma) {
  const RobotParams p = presets::convex_synthetic();
  const ControllerSpec base = ControllerSpec::with_scalar_damping(6, deg2rad(8.0), 5.0, 0.05, 1.0);
  const StiffnessReport r = transverse_stiffness_sweep(base, {0.01, 0.055, 0.1}, p);
  ASSERT_FALSE(r.partial);
  EXPECT_GE(r.correlation, 0.99);
  EXPECT_GT(r.fit_slope, 0.0);
}

TEST(Sweep, PartialOnFailure) {
  const RobotParams p = presets::stiff_spine();
  const StiffnessReport r = open_loop_stiffness_sweep({0.0, 5.0, -1.0, 10.0}, p);
  EXPECT_TRUE(r.partial);
  EXPECT_EQ(r.sweep_values.size(), 2u);
  EXPECT_NE(r.failure.find("mu = -1"), std::string::npos);
}

TEST(Fits, AffineAndPearson) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const AffineFit f = affine_fit(x, y);
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(pearson(x, y), 1.0);
  EXPECT_THROW(affine_fit({1.0, 1.0}, {2.0, 3.0}), DomainError);
}

TEST(Reports, CsvAndSummaryFormatting) {
  StiffnessReport r;
  r.sweep_values = {0.0, 5.0};
  r.stiffness_values = {311.790797294219, 314.7};
  r.fit_slope = 0.58184054;
  r.correlation = 0.99998312;
  std::ostringstream csv, summary;
  write_stiffness_csv(csv, r);
  write_summary(summary, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "sweep_value,stiffness");
  EXPECT_NE(summary.str().find("fit_slope: 0.581841"), std::string::npos);
  EXPECT_NE(summary.str().find("correlation: 0.999983"), std::string::npos);
}

}  // namespace
}  // namespace tendonsim
