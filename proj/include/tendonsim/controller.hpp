#pragma once

#include <string>
#include <string_view>

#include "tendonsim/dynamics.hpp"
#include "tendonsim/model.hpp"

namespace tendonsim {

/// What to do when the law asks a tendon to push.
enum class SaturationPolicy { clamp, strict, monitor };

std::string_view to_string(SaturationPolicy policy);
SaturationPolicy saturation_policy_from_string(std::string_view name);

struct ControllerSpec {
  double theta_star = 0.0;  // desired homogeneous angle (rad)
  double tau2_star = 0.0;   // pretension (N)
  double gamma = 0.1;       // shaping gain
  Eigen::MatrixXd kd;       // damping injection, n x n SPD
  SaturationPolicy saturation = SaturationPolicy::clamp;

  static ControllerSpec with_scalar_damping(int n, double theta_star, double tau2_star,
                                            double gamma, double kd,
                                            SaturationPolicy saturation = SaturationPolicy::clamp);

  Eigen::VectorXd target(Eigen::Index n) const { return Eigen::VectorXd::Constant(n, theta_star); }

  bool operator==(const ControllerSpec& o) const {
    return theta_star == o.theta_star && tau2_star == o.tau2_star && gamma == o.gamma &&
           kd.rows() == o.kd.rows() && kd.cols() == o.kd.cols() && kd == o.kd &&
           saturation == o.saturation;
  }
};

void validate(const ControllerSpec& spec, const RobotParams& params);

/// tau = T_u u with T_u = [[1, -1], [0, 1]].
inline Eigen::Vector2d input_transform(const Eigen::Vector2d& u) { return {u(0) - u(1), u(1)}; }
inline Eigen::Vector2d input_transform_inverse(const Eigen::Vector2d& tau) {
  return {tau(0) + tau(1), tau(1)};
}

/// U_d = -gamma cos(q_sum - q_sum*) + (alpha2 / 2) |q - q*|^2.
template <typename Derived>
typename Derived::Scalar desired_potential(const Eigen::MatrixBase<Derived>& q,
                                           const ControllerSpec& spec, const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = q.size();
  const Scalar shift = q.sum() - Scalar(n) * Scalar(spec.theta_star);
  const VectorX<Scalar> e = q - VectorX<Scalar>::Constant(n, Scalar(spec.theta_star));
  return -Scalar(spec.gamma) * std::cos(shift) + Scalar(params.alpha2) / Scalar(2) * e.squaredNorm();
}

/// gamma sin(q_sum - q_sum*) 1_n + alpha2 (q - q*). Also the static map phi.
template <typename Derived>
VectorX<typename Derived::Scalar> desired_potential_gradient(const Eigen::MatrixBase<Derived>& q,
                                                             const ControllerSpec& spec,
                                                             const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = q.size();
  const Scalar shift = q.sum() - Scalar(n) * Scalar(spec.theta_star);
  VectorX<Scalar> g = Scalar(params.alpha2) * (q - VectorX<Scalar>::Constant(n, Scalar(spec.theta_star)));
  g.array() += Scalar(spec.gamma) * std::sin(shift);
  return g;
}

/// gamma cos(q_sum - q_sum*) 1 1^T + alpha2 I.
template <typename Derived>
MatrixX<typename Derived::Scalar> desired_potential_hessian(const Eigen::MatrixBase<Derived>& q,
                                                            const ControllerSpec& spec,
                                                            const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = q.size();
  const Scalar shift = q.sum() - Scalar(n) * Scalar(spec.theta_star);
  MatrixX<Scalar> h = MatrixX<Scalar>::Constant(n, n, Scalar(spec.gamma) * std::cos(shift));
  h.diagonal().array() += Scalar(params.alpha2);
  return h;
}

struct ControlOutput {
  Eigen::Vector2d u;
  Eigen::Vector2d tau;
  Eigen::Vector2d tau_st;
  Eigen::Vector2d tau_es;
  Eigen::Vector2d tau_da;
  bool saturated = false;
  /// Smallest pretension that keeps both tensions nonnegative at this state.
  double tau2_min_required = 0.0;
};

/// tau = tau_st + tau_es + tau_da, u = T_u^-1 tau, then the saturation policy.
ControlOutput control_law(const State& state, const ControllerSpec& spec, const RobotParams& params);

/// Closed-loop generalized tendon force G(q) u for the unsaturated law.
Eigen::VectorXd closed_loop_tendon_torque(const State& state, const ControllerSpec& spec,
                                          const RobotParams& params);

/// (n-1) x n banded differencing matrix with rows (.., 1, -1, ..).
Eigen::MatrixXd differencing_annihilator(Eigen::Index n);

/// G_N^perp (grad U - grad U_d).
Eigen::VectorXd matching_residual(const Eigen::VectorXd& q, const ControllerSpec& spec,
                                  const RobotParams& params);

struct ConvexityBound {
  double stated;        // alpha2
  double conservative;  // alpha2 / n, worst case cos = -1
  bool satisfies_stated;
  bool satisfies_conservative;
};

ConvexityBound convexity_bound(const ControllerSpec& spec, const RobotParams& params);

/// Feedback source for integrate(). H_d = (1/2) p^T M^-1 p + U_d.
ControlSource feedback(const ControllerSpec& spec, const RobotParams& params);

/// Static load -grad U_d for probing the regulated equilibrium.
StaticLoad closed_loop_load(const ControllerSpec& spec, const RobotParams& params);

/// Shaped energy H_d = (1/2) p^T M^-1 p + U_d(q).
double shaped_hamiltonian(const State& state, const ControllerSpec& spec, const RobotParams& params);

}  // namespace tendonsim
