#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "graspprior/error.hpp"
#include "graspprior/geometry.hpp"

using namespace graspprior;

namespace
{

// Rodrigues written out component-wise: R = c I + s [k]x + (1 - c) k k^T
Mat3 rodrigues_oracle(double x, double y, double z)
{
  const double angle = std::sqrt(x * x + y * y + z * z);
  const double kx = x / angle, ky = y / angle, kz = z / angle;
  const double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
  Mat3 R;
  R << c + kx * kx * v, kx * ky * v - kz * s, kx * kz * v + ky * s,  //
      ky * kx * v + kz * s, c + ky * ky * v, ky * kz * v - kx * s,    //
      kz * kx * v - ky * s, kz * ky * v + kx * s, c + kz * kz * v;
  return R;
}

}  // namespace

TEST_CASE("rotation_from_axis_angle: zero is identity")
{
  CHECK(rotation_from_axis_angle(AxisAngle::Zero()) == Mat3::Identity());
}

TEST_CASE("rotation_from_axis_angle: quarter turn about z maps x to y")
{
  const Rotation R = rotation_from_axis_angle(AxisAngle(0, 0, std::numbers::pi / 2));
  CHECK((R * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-15);
}

TEST_CASE("rotation_from_axis_angle: matches the Rodrigues oracle")
{
  const Rotation R = rotation_from_axis_angle(AxisAngle(0.3, -0.1, 0.7));
  CHECK((R - rodrigues_oracle(0.3, -0.1, 0.7)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rotation_from_axis_angle: rejects non-finite input")
{
  CHECK_THROWS_AS(rotation_from_axis_angle(AxisAngle(NAN, 0, 0)), Error);
  CHECK_THROWS_AS(rotation_from_axis_angle(AxisAngle(0, INFINITY, 0)), Error);
}

TEST_CASE("apply")
{
  CHECK(apply(Rotation::Identity(), Vec3(1, 2, 3)) == Vec3(1, 2, 3));
  const Rotation Rz = rotation_from_axis_angle(AxisAngle(0, 0, std::numbers::pi / 2));
  CHECK((apply(Rz, Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("properties: rotations are orthonormal isometries and log inverts exp")
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int i = 0; i < 500; ++i)
  {
    const AxisAngle aa(uni(rng), uni(rng), uni(rng));
    const Vec3 v(uni(rng), uni(rng), uni(rng));
    const Rotation R = rotation_from_axis_angle(aa);
    CHECK(is_rotation(R));
    CHECK(std::abs(apply(R, v).norm() - v.norm()) <= 1e-12);
    if (aa.norm() < std::numbers::pi - 1e-3)
      CHECK((axis_angle_from_rotation(R) - aa).norm() < 1e-10);
    CHECK((rotation_from_axis_angle(axis_angle_from_rotation(R)) - R).norm() < 1e-10);
  }
}

TEST_CASE("axis_angle_from_rotation near pi")
{
  const AxisAngle aa = std::numbers::pi * Vec3(1, 2, -2).normalized();
  const Rotation R = rotation_from_axis_angle(aa);
  CHECK((rotation_from_axis_angle(axis_angle_from_rotation(R)) - R).norm() < 1e-9);
}

TEST_CASE("left_jacobian is the derivative of exp")
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);
  for (int i = 0; i < 50; ++i)
  {
    const AxisAngle aa(uni(rng), uni(rng), uni(rng));
    const Mat3 J = left_jacobian(aa);
    for (int k = 0; k < 3; ++k)
    {
      const double h = 1e-6;
      const Rotation Rp = rotation_from_axis_angle(aa + h * Vec3::Unit(k));
      const Rotation Rm = rotation_from_axis_angle(aa - h * Vec3::Unit(k));
      const Rotation R = rotation_from_axis_angle(aa);
      // (dR/da_k) R^T is skew(J e_k)
      const Mat3 W = (Rp - Rm) / (2 * h) * R.transpose();
      const Vec3 w(W(2, 1), W(0, 2), W(1, 0));
      CHECK((w - J.col(k)).norm() < 1e-8);
    }
  }
  CHECK((left_jacobian(AxisAngle::Zero()) - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("skew and renormalize")
{
  const Vec3 a(1, -2, 3), b(0.5, 4, -1);
  CHECK((skew(a) * b - a.cross(b)).norm() < 1e-15);
  Rotation R = rotation_from_axis_angle(AxisAngle(0.4, 0.2, -0.3));
  R(0, 1) += 1e-7;
  CHECK_FALSE(is_rotation(R));
  CHECK(is_rotation(renormalize(R)));
}
