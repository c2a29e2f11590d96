#pragma once

#include <cmath>

#include "tendonsim/errors.hpp"
#include "tendonsim/model/params.hpp"
#include "tendonsim/types.hpp"

namespace tendonsim {

/// Rotational inertia of one link about its centre, (1/12) m (2 ell)^2.
inline double link_rotational_inertia(const RobotParams& params) {
  const double length = 2.0 * params.ell;
  return params.m * length * length / 12.0;
}

/// M(q) = sum_i m J_ci^T J_ci + I_rot w_i^T w_i, point masses at the link
/// centres and w_i = (1, ..., 1, 0, ..., 0) with i + 1 leading ones.
template <typename Derived>
MatrixX<typename Derived::Scalar> inertia_matrix(const Eigen::MatrixBase<Derived>& q,
                                                 const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  if (!q.allFinite()) throw DomainError("inertia_matrix: non-finite configuration");
  const Eigen::Index n = q.size();
  const Scalar ell = Scalar(params.ell);
  const Scalar mass = Scalar(params.m);
  const Scalar rot = Scalar(link_rotational_inertia(params));

  Matrix2X<Scalar> tangent(2, n);
  Scalar s(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    s += q(i);
    tangent.col(i) << std::cos(s), -std::sin(s);
  }

  MatrixX<Scalar> inertia = MatrixX<Scalar>::Zero(n, n);
  Matrix2X<Scalar> jac(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Centre of link i: half a link along link i plus full lengths of its
    // proximal links (suffix sums over the tangents).
    Vector2<Scalar> suffix = ell * tangent.col(i);
    jac.col(i) = suffix;
    for (Eigen::Index k = i - 1; k >= 0; --k) {
      suffix += Scalar(2) * ell * tangent.col(k);
      jac.col(k) = suffix;
    }
    const auto block = jac.leftCols(i + 1);
    inertia.topLeftCorner(i + 1, i + 1).noalias() += mass * block.transpose() * block;
    inertia.topLeftCorner(i + 1, i + 1).array() += rot;
  }
  return inertia;
}

/// (1/2) v^T M(q) v without forming M: link angular rates and centre
/// velocities by a base-to-tip recursion.
template <typename Derived, typename DerivedV>
typename Derived::Scalar kinetic_coenergy(const Eigen::MatrixBase<Derived>& q,
                                          const Eigen::MatrixBase<DerivedV>& v,
                                          const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  const Scalar ell = Scalar(params.ell);
  const Scalar mass = Scalar(params.m);
  const Scalar rot = Scalar(link_rotational_inertia(params));
  Scalar s(0), omega(0), twice(0);
  Vector2<Scalar> joint_vel = Vector2<Scalar>::Zero();
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    s += q(i);
    omega += v(i);
    const Vector2<Scalar> tangent(std::cos(s), -std::sin(s));
    const Vector2<Scalar> centre_vel = joint_vel + ell * omega * tangent;
    twice += mass * centre_vel.squaredNorm() + rot * omega * omega;
    joint_vel += Scalar(2) * ell * omega * tangent;
  }
  return twice / Scalar(2);
}

}  // namespace tendonsim
