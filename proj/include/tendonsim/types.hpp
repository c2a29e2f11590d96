#pragma once

#include <Eigen/Dense>

namespace tendonsim {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Matrix2X = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

template <typename Scalar>
inline constexpr Scalar kHalfPi = Scalar(1.57079632679489661923132169163975144L);

template <typename Scalar>
inline constexpr Scalar kPi = Scalar(3.14159265358979323846264338327950288L);

inline double deg2rad(double deg) { return deg * kPi<double> / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi<double>; }

}  // namespace tendonsim
