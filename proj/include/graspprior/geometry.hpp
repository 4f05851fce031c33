#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace graspprior
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rotation matrix. Stored as a plain 3x3; validity is checked at the
/// boundaries (file loading, grasp construction) with `is_rotation`.
using Rotation = Eigen::Matrix3d;

/// Local rotation increment: direction is the axis, norm is the angle in radians.
using AxisAngle = Eigen::Vector3d;

/// Gradient with respect to the local pose parameters: (translation, rotation increment, width).
using Vec7 = Eigen::Matrix<double, 7, 1>;

constexpr double kRotationTolerance = 1e-9;

/// Skew-symmetric cross-product matrix: skew(a) * b == a.cross(b).
Mat3 skew(const Vec3& a);

/// Exponential map (Rodrigues). Throws InvalidArgument on non-finite input.
Rotation rotation_from_axis_angle(const AxisAngle& aa);

/// Inverse of the exponential map, angle in [0, pi].
AxisAngle axis_angle_from_rotation(const Rotation& R);

/// Left Jacobian of SO(3): exp(aa + e) ~= exp(J_l(aa) e) * exp(aa) for small e.
Mat3 left_jacobian(const AxisAngle& aa);

inline Vec3 apply(const Rotation& R, const Vec3& v) { return R * v; }

/// Gram-Schmidt on rows; used after composing increments.
Rotation renormalize(const Rotation& R);

bool is_rotation(const Rotation& R, double tol = kRotationTolerance);

bool all_finite(const Vec3& v);

}  // namespace graspprior
