#pragma once

#include <cmath>
#include <string>

#include "tendonsim/errors.hpp"
#include "tendonsim/model/params.hpp"
#include "tendonsim/types.hpp"

namespace tendonsim {

/// G(q) = [G1 G2] with G1 = (c1 + g1) 1_n and G2 = (g1 - c1) 1_n.
template <typename Scalar>
struct InputMatrixEval {
  Scalar g1_scalar;
  VectorX<Scalar> col1;
  VectorX<Scalar> col2;

  MatrixX<Scalar> matrix() const {
    MatrixX<Scalar> g(col1.size(), 2);
    g << col1, col2;
    return g;
  }
};

/// Scalar moment-arm modulation g1(q) = c2 sin(q_sum / n). Odd in q and
/// equal to c2 sin(theta) on homogeneous configurations.
template <typename Derived>
typename Derived::Scalar moment_arm_modulation(const Eigen::MatrixBase<Derived>& q,
                                               const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  return Scalar(params.c2) * std::sin(q.sum() / Scalar(q.size()));
}

/// c1 + g1(q), checked against the singular set.
template <typename Scalar>
Scalar bending_arm(Scalar g1, const RobotParams& params) {
  const Scalar arm = Scalar(params.c1) + g1;
  const Scalar scale = Scalar(std::abs(params.c1) + std::abs(params.c2));
  if (!(std::abs(arm) > Scalar(1e-9) * scale)) {
    throw SingularConfiguration("c1 + g1(q) = " + std::to_string(double(arm)) +
                                " vanishes; tendon input cannot bend the section");
  }
  return arm;
}

template <typename Derived>
InputMatrixEval<typename Derived::Scalar> input_matrix(const Eigen::MatrixBase<Derived>& q,
                                                       const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  if (!q.allFinite()) throw DomainError("input_matrix: non-finite configuration");
  const Scalar g1 = moment_arm_modulation(q, params);
  const Scalar arm = bending_arm(g1, params);
  const Eigen::Index n = q.size();
  return {g1, VectorX<Scalar>::Constant(n, arm), VectorX<Scalar>::Constant(n, g1 - Scalar(params.c1))};
}

/// Generalized tendon force G(q) u. Every component equals
/// (c1 + g1) u1 + (g1 - c1) u2.
template <typename Derived>
VectorX<typename Derived::Scalar> tendon_torque(const Eigen::MatrixBase<Derived>& q,
                                                const Vector2<typename Derived::Scalar>& u,
                                                const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  const Scalar g1 = moment_arm_modulation(q, params);
  const Scalar c1 = Scalar(params.c1);
  return VectorX<Scalar>::Constant(q.size(), (c1 + g1) * u(0) + (g1 - c1) * u(1));
}

/// Jacobian d(G1 + G2)/dq = (2 c2 cos(q_sum / n) / n) 1 1^T.
template <typename Derived>
MatrixX<typename Derived::Scalar> input_matrix_sum_jacobian(const Eigen::MatrixBase<Derived>& q,
                                                            const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = q.size();
  const Scalar slope = Scalar(2) * Scalar(params.c2) * std::cos(q.sum() / Scalar(n)) / Scalar(n);
  return MatrixX<Scalar>::Constant(n, n, slope);
}

/// W(q) with grad W = G(q) u for constant tensions u. The tendon force is a
/// function of q_sum along 1_n, so it derives from a potential:
/// W = c1 (u1 - u2) q_sum - n c2 cos(q_sum / n) (u1 + u2).
template <typename Derived>
typename Derived::Scalar input_work_potential(const Eigen::MatrixBase<Derived>& q,
                                              const Vector2<typename Derived::Scalar>& u,
                                              const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  const Scalar n = Scalar(q.size());
  const Scalar sum = q.sum();
  return Scalar(params.c1) * (u(0) - u(1)) * sum -
         n * Scalar(params.c2) * std::cos(sum / n) * (u(0) + u(1));
}

}  // namespace tendonsim
