#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tendonsim/controller.hpp"
#include "tendonsim/dynamics.hpp"
#include "tendonsim/model.hpp"

namespace tendonsim {

struct EquilibriumReport {
  Eigen::VectorXd q_bar;
  double residual_norm = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  bool assignable = false;
  /// Both tendon tensions u = (tau1 + tau2, tau2) are nonnegative.
  bool tensions_nonnegative = false;
  std::string reason;
  int iterations = 0;
};

enum class StiffnessMode { open_loop_analytic, open_loop_probe, closed_loop_overall, closed_loop_transverse };

std::string_view to_string(StiffnessMode mode);

struct StiffnessReport {
  StiffnessMode mode = StiffnessMode::open_loop_probe;
  double operating_point = 0.0;  // theta* (rad)
  std::vector<double> sweep_values;
  std::vector<double> stiffness_values;
  double fit_slope = 0.0;
  double fit_intercept = 0.0;
  double correlation = 0.0;
  /// A sweep point failed; values cover the points before it.
  bool partial = false;
  std::string failure;
};

/// Rows form an orthonormal basis of the complement of v: (n-1) x n, full
/// rank, annihilates v.
Eigen::MatrixXd orthogonal_annihilator(const Eigen::VectorXd& v);

/// Moore-Penrose pseudoinverse by SVD with relative cutoff rcond.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rcond = 1e-12);

/// Membership of q in the assignable set for input columns g0 + g1 and 2 g1
/// and potential gradient grad_u. tau1 from the annihilated equations, tau2
/// from the projection on g1. When g1^perp g0 vanishes the two columns are
/// parallel and the decomposition along their common direction is used with
/// the minimal tau2 >= 0.
EquilibriumReport assignable_membership_general(const Eigen::VectorXd& q, const Eigen::VectorXd& grad_u,
                                                const Eigen::VectorXd& g0, const Eigen::VectorXd& g1,
                                                double tolerance = 1e-10);

/// Same, with grad U from the model. The parallel case is handed to
/// assignable_membership.
EquilibriumReport assignable_membership_general(const Eigen::VectorXd& q, const Eigen::VectorXd& g0,
                                                const Eigen::VectorXd& g1, const RobotParams& params);

/// Membership for the model's own input matrix: G_N^perp grad U must vanish,
/// then tau_N = mean(grad U) is split with the minimal pretension.
EquilibriumReport assignable_membership(const Eigen::VectorXd& q, const RobotParams& params);

/// tau_N = alpha1 sin(n theta) + alpha2 theta on q = theta 1_n, split into
/// (tau1, tau2). Without tau2 the minimal pretension keeping u >= 0 is used.
EquilibriumReport homogeneous_membership(double theta, const RobotParams& params,
                                         std::optional<double> tau2 = std::nullopt);

/// Smallest tau2 >= 0 with u1 = tau1 + tau2 >= 0 on a homogeneous equilibrium.
double minimal_pretension(double theta, const RobotParams& params);

struct OpenLoopStiffness {
  double stiffness;
  /// dK_T / dmu.
  double slope;
  /// The tendon term changes K_T (its coefficient is nonzero).
  bool stiffening;
};

/// Transverse stiffness at the straight equilibrium under balanced tension mu.
OpenLoopStiffness open_loop_stiffness_analytic(double mu, const RobotParams& params,
                                               double l_n = std::numeric_limits<double>::quiet_NaN());

struct OverallStiffness {
  Eigen::MatrixXd analytic;
  Eigen::MatrixXd numeric;
  double max_relative_difference;
  Eigen::VectorXd eigenvalues;           // numeric, ascending
  Eigen::VectorXd expected_eigenvalues;  // alpha2 (n-1 times), alpha2 + n gamma
  Eigen::VectorXd printed_eigenvalues;   // alpha2 (n-1 times), alpha2 + gamma |cos 0|
  std::string discrepancy;
};

/// gamma 1 1^T + alpha2 I, plus central differences of phi = grad U_d at q*.
OverallStiffness overall_stiffness_matrix(const ControllerSpec& spec, const RobotParams& params);

/// Newton on phi(q) = tau_ext from q*; tolerance 1e-12, at most 50 steps.
EquilibriumReport shifted_equilibrium(const Eigen::VectorXd& tau_ext, const ControllerSpec& spec,
                                      const RobotParams& params);

struct AffineFit {
  double slope;
  double intercept;
};

AffineFit affine_fit(const std::vector<double>& x, const std::vector<double>& y);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Largest deviation of y from the secant through its end points, relative
/// to max |y|.
double secant_deviation(const std::vector<double>& x, const std::vector<double>& y);

StiffnessReport open_loop_stiffness_sweep(const std::vector<double>& mus, const RobotParams& params,
                                          StiffnessMode mode = StiffnessMode::open_loop_probe,
                                          double delta_x = 0.0, const ProbeOptions& options = {});

/// For each gamma the homogeneous target is an exact equilibrium of the
/// regulated statics, so it is probed directly against grad U_d.
StiffnessReport transverse_stiffness_sweep(const ControllerSpec& spec_base, const std::vector<double>& gammas,
                                           const RobotParams& params, double delta_x = 0.0,
                                           const ProbeOptions& options = {});

/// Columns sweep_value, stiffness.
void write_stiffness_csv(std::ostream& out, const StiffnessReport& report);
void write_summary(std::ostream& out, const StiffnessReport& report);
void write_summary(std::ostream& out, const EquilibriumReport& report);

}  // namespace tendonsim
