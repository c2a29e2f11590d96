#pragma once

#include <cmath>
#include <utility>

#include "tendonsim/errors.hpp"
#include "tendonsim/model/params.hpp"
#include "tendonsim/types.hpp"

namespace tendonsim {

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& q) {
  if (!q.allFinite()) throw DomainError("non-finite configuration");
}

}  // namespace detail

/// Lumped-mass gravitational energy, summed link by link with l_i = 2 ell and
/// uniform masses. Telescopes to ell * m * (1 - cos(q_sum)).
template <typename Derived>
typename Derived::Scalar gravity_potential_sum(const Eigen::MatrixBase<Derived>& q,
                                               const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(q);
  const Scalar link = Scalar(2) * Scalar(params.ell);
  const Scalar mass = Scalar(params.m);
  Scalar energy(0);
  Scalar before(0);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const Scalar after = before + q(i);
    energy += link * mass / Scalar(2) * (std::cos(before) - std::cos(after));
    before = after;
  }
  return energy;
}

template <typename Derived>
typename Derived::Scalar gravity_potential(const Eigen::MatrixBase<Derived>& q,
                                           const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(q);
  return Scalar(params.alpha1) * (Scalar(1) - std::cos(q.sum()));
}

/// q * cot(q / 2), with its even Taylor series near 0 where the direct
/// form cancels.
template <typename Scalar>
Scalar q_cot_half(Scalar q) {
  if (std::abs(q) < Scalar(1e-4)) {
    const Scalar q2 = q * q;
    return Scalar(2) - q2 / Scalar(6) - q2 * q2 / Scalar(360);
  }
  return q / std::tan(q / Scalar(2));
}

/// Spring boundary lengths (h1, h2) of one constant-curvature segment.
template <typename Scalar>
std::pair<Scalar, Scalar> boundary_lengths(Scalar q, const RobotParams& params) {
  const Scalar arc = Scalar(params.ell) * q_cot_half(q);
  const Scalar offset = q * Scalar(params.r);
  return {arc + offset, arc - offset};
}

template <typename Derived>
typename Derived::Scalar elastic_potential_exact(const Eigen::MatrixBase<Derived>& q,
                                                 const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(q);
  const Scalar l2 = Scalar(params.ell) * Scalar(params.ell);
  const Scalar r2 = Scalar(params.r) * Scalar(params.r);
  Scalar energy(0);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const Scalar qi = q(i);
    const Scalar c = std::cos(qi / Scalar(2));
    energy += Scalar(params.k_elastic) * (qi * qi * (l2 * c * c + r2) - l2) +
              Scalar(params.k_bend) * qi * qi;
  }
  return energy;
}

template <typename Derived>
VectorX<typename Derived::Scalar> elastic_gradient_exact(const Eigen::MatrixBase<Derived>& q,
                                                         const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(q);
  const Scalar l2 = Scalar(params.ell) * Scalar(params.ell);
  const Scalar r2 = Scalar(params.r) * Scalar(params.r);
  const Scalar k = Scalar(params.k_elastic);
  VectorX<Scalar> g(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const Scalar qi = q(i);
    const Scalar c = std::cos(qi / Scalar(2));
    // d/dq [q^2 cos^2(q/2)] = 2 q cos^2(q/2) - q^2 sin(q) / 2
    g(i) = k * (Scalar(2) * qi * (l2 * c * c + r2) - l2 * qi * qi * std::sin(qi) / Scalar(2)) +
           Scalar(2) * Scalar(params.k_bend) * qi;
  }
  return g;
}

/// Quadratic coefficient that matches the exact elastic energy's curvature
/// at the straight configuration.
inline double equivalent_alpha2(const RobotParams& params) {
  return 2.0 * (params.k_elastic * (params.ell * params.ell + params.r * params.r) + params.k_bend);
}

/// (alpha2 / 2) |q|^2 + U0, so that the gradient is exactly alpha2 * q.
template <typename Derived>
typename Derived::Scalar elastic_potential_quadratic(const Eigen::MatrixBase<Derived>& q,
                                                     const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(q);
  return Scalar(params.alpha2) / Scalar(2) * q.squaredNorm() + Scalar(params.u0);
}

enum class ElasticModel { quadratic, exact };

template <typename Derived>
typename Derived::Scalar total_potential(const Eigen::MatrixBase<Derived>& q,
                                         const RobotParams& params,
                                         ElasticModel model = ElasticModel::quadratic) {
  using Scalar = typename Derived::Scalar;
  const Scalar gravity = params.gravity ? gravity_potential(q, params) : Scalar(0);
  const Scalar elastic = model == ElasticModel::quadratic ? elastic_potential_quadratic(q, params)
                                                          : elastic_potential_exact(q, params);
  return gravity + elastic;
}

/// alpha1 sin(q_sum) 1_n + alpha2 q.
template <typename Derived>
VectorX<typename Derived::Scalar> potential_gradient(const Eigen::MatrixBase<Derived>& q,
                                                     const RobotParams& params,
                                                     ElasticModel model = ElasticModel::quadratic) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(q);
  VectorX<Scalar> g = model == ElasticModel::quadratic
                          ? VectorX<Scalar>(Scalar(params.alpha2) * q)
                          : elastic_gradient_exact(q, params);
  if (params.gravity) g.array() += Scalar(params.alpha1) * std::sin(q.sum());
  return g;
}

/// Hessian of the control-design potential: alpha1 cos(q_sum) 1 1^T + alpha2 I.
template <typename Derived>
MatrixX<typename Derived::Scalar> potential_hessian(const Eigen::MatrixBase<Derived>& q,
                                                    const RobotParams& params) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(q);
  const Eigen::Index n = q.size();
  const Scalar coupling = params.gravity ? Scalar(params.alpha1) * std::cos(q.sum()) : Scalar(0);
  MatrixX<Scalar> h = MatrixX<Scalar>::Constant(n, n, coupling);
  h.diagonal().array() += Scalar(params.alpha2);
  return h;
}

}  // namespace tendonsim
