#pragma once

#include <complex>

#include <Eigen/Core>

namespace lipstab {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using CVec2 = Eigen::Matrix<cplx, 2, 1>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace lipstab
