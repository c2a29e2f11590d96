#pragma once

#include <cmath>

#include "tendonsim/errors.hpp"
#include "tendonsim/model/params.hpp"
#include "tendonsim/types.hpp"

// Planar chain geometry. A base link of length ell stands along +y from the
// origin; joint i sits at the distal end of link i-1 and every link after the
// base has length 2 ell. Angles are cumulative from the +y axis, positive
// towards +x: link i points along (sin s_i, cos s_i) with s_i = q_1 + ... + q_i.

namespace tendonsim {

template <typename Scalar>
struct ChainPose {
  Vector2<Scalar> tip;
  Matrix2X<Scalar> joints;   // joint i in column i-1, plus the tip in the last column
  Matrix2X<Scalar> centers;  // link centres
};

namespace detail {

template <typename Derived>
VectorX<typename Derived::Scalar> cumulative_angles(const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> s(q.size());
  Scalar acc(0);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    acc += q(i);
    s(i) = acc;
  }
  return s;
}

}  // namespace detail

template <typename Derived>
ChainPose<typename Derived::Scalar> forward_kinematics(const Eigen::MatrixBase<Derived>& q,
                                                       const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  if (!q.allFinite()) throw DomainError("forward_kinematics: non-finite configuration");
  const Eigen::Index n = q.size();
  const Scalar ell = Scalar(params.ell);
  const VectorX<Scalar> s = detail::cumulative_angles(q);
  ChainPose<Scalar> pose{Vector2<Scalar>::Zero(), Matrix2X<Scalar>(2, n + 1), Matrix2X<Scalar>(2, n)};
  Vector2<Scalar> joint(Scalar(0), ell);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector2<Scalar> axis(std::sin(s(i)), std::cos(s(i)));
    pose.joints.col(i) = joint;
    pose.centers.col(i) = joint + ell * axis;
    joint += Scalar(2) * ell * axis;
  }
  pose.joints.col(n) = joint;
  pose.tip = joint;
  return pose;
}

/// Position of the point at distance `offset` from joint `link` along link
/// `link` (0-based).
template <typename Derived>
Vector2<typename Derived::Scalar> point_on_link(const Eigen::MatrixBase<Derived>& q,
                                                const RobotParams& params, Eigen::Index link,
                                                typename Derived::Scalar offset) {
  using Scalar = typename Derived::Scalar;
  const Scalar ell = Scalar(params.ell);
  Vector2<Scalar> point(Scalar(0), ell);
  Scalar s(0);
  for (Eigen::Index i = 0; i <= link; ++i) {
    s += q(i);
    const Scalar length = i < link ? Scalar(2) * ell : offset;
    point += length * Vector2<Scalar>(std::sin(s), std::cos(s));
  }
  return point;
}

/// World-frame Jacobian (2 x n) of point_on_link with respect to q.
template <typename Derived>
Matrix2X<typename Derived::Scalar> point_jacobian(const Eigen::MatrixBase<Derived>& q,
                                                  const RobotParams& params, Eigen::Index link,
                                                  typename Derived::Scalar offset) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = q.size();
  const Scalar ell = Scalar(params.ell);
  const VectorX<Scalar> s = detail::cumulative_angles(q);
  Matrix2X<Scalar> jac = Matrix2X<Scalar>::Zero(2, n);
  // Column k collects the derivative of every segment distal to joint k.
  Vector2<Scalar> suffix = offset * Vector2<Scalar>(std::cos(s(link)), -std::sin(s(link)));
  jac.col(link) = suffix;
  for (Eigen::Index k = link - 1; k >= 0; --k) {
    suffix += Scalar(2) * ell * Vector2<Scalar>(std::cos(s(k)), -std::sin(s(k)));
    jac.col(k) = suffix;
  }
  return jac;
}

/// Lever arm from the last joint to the contact point; l_n is measured from
/// the centre of the last link, so l_n = ell is the tip.
inline double contact_lever(const RobotParams& params, double l_n) { return params.ell + l_n; }

template <typename Derived>
Matrix2X<typename Derived::Scalar> jacobian_world(const Eigen::MatrixBase<Derived>& q,
                                                  const RobotParams& params,
                                                  double l_n) {
  using Scalar = typename Derived::Scalar;
  return point_jacobian(q, params, q.size() - 1, Scalar(contact_lever(params, l_n)));
}

template <typename Derived>
Matrix2X<typename Derived::Scalar> jacobian_world(const Eigen::MatrixBase<Derived>& q,
                                                  const RobotParams& params) {
  return jacobian_world(q, params, params.ell);
}

/// Rotation taking world vectors into the last link's (transverse, axial)
/// frame.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> tip_frame_rotation(Scalar last_angle) {
  Eigen::Matrix<Scalar, 2, 2> rot;
  rot << std::cos(last_angle), -std::sin(last_angle),
         std::sin(last_angle), std::cos(last_angle);
  return rot;
}

/// Contact-point Jacobian expressed in the last link's frame: row 0 is the
/// transverse direction J1, row 1 the axial direction J2.
template <typename Derived>
Matrix2X<typename Derived::Scalar> jacobian_tip_frame(const Eigen::MatrixBase<Derived>& q,
                                                      const RobotParams& params,
                                                      double l_n) {
  return tip_frame_rotation(q.sum()) * jacobian_world(q, params, l_n);
}

template <typename Derived>
Matrix2X<typename Derived::Scalar> jacobian_tip_frame(const Eigen::MatrixBase<Derived>& q,
                                                      const RobotParams& params) {
  return jacobian_tip_frame(q, params, params.ell);
}

/// Contact-point velocity relative to the parent of the last link, in the
/// last link's frame. Joints proximal to the last one move the contact frame
/// rigidly, so only the last column survives.
template <typename Derived>
Matrix2X<typename Derived::Scalar> jacobian_contact_relative(const Eigen::MatrixBase<Derived>& q,
                                                             const RobotParams& params,
                                                             double l_n) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = q.size();
  const Scalar lever = Scalar(contact_lever(params, l_n));
  const Matrix2X<Scalar> contact = point_jacobian(q, params, n - 1, lever);
  const Matrix2X<Scalar> joint = point_jacobian(q, params, n - 1, Scalar(0));
  const Vector2<Scalar> arm = point_on_link(q, params, n - 1, lever) -
                              point_on_link(q, params, n - 1, Scalar(0));
  const Vector2<Scalar> swing(arm.y(), -arm.x());
  Matrix2X<Scalar> rel = contact - joint;
  for (Eigen::Index k = 0; k + 1 < n; ++k) rel.col(k) -= swing;
  return tip_frame_rotation(q.sum()) * rel;
}

}  // namespace tendonsim
