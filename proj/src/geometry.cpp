#include "graspprior/geometry.hpp"

#include <cmath>

#include "graspprior/error.hpp"

namespace graspprior
{

Mat3 skew(const Vec3& a)
{
  Mat3 S;
  S << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return S;
}

Rotation rotation_from_axis_angle(const AxisAngle& aa)
{
  if (!all_finite(aa))
    throw Error(ErrorKind::InvalidArgument, "axis-angle has non-finite components");

  const double theta2 = aa.squaredNorm();
  const Mat3 K = skew(aa);
  double a, b;
  if (theta2 < 1e-12)
  {
    // Taylor terms of sin(x)/x and (1-cos(x))/x^2
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  }
  else
  {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * K + b * K * K;
}

AxisAngle axis_angle_from_rotation(const Rotation& R)
{
  const Eigen::AngleAxisd aa(R);
  return aa.axis() * aa.angle();
}

Mat3 left_jacobian(const AxisAngle& aa)
{
  const double theta2 = aa.squaredNorm();
  const Mat3 K = skew(aa);
  double b, c;
  if (theta2 < 1e-12)
  {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  }
  else
  {
    const double theta = std::sqrt(theta2);
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + b * K + c * K * K;
}

Rotation renormalize(const Rotation& R)
{
  Vec3 r0 = R.row(0).transpose();
  Vec3 r1 = R.row(1).transpose();
  r0.normalize();
  r1 = (r1 - r0.dot(r1) * r0).normalized();
  const Vec3 r2 = r0.cross(r1);
  Rotation out;
  out.row(0) = r0.transpose();
  out.row(1) = r1.transpose();
  out.row(2) = r2.transpose();
  return out;
}

bool is_rotation(const Rotation& R, double tol)
{
  if (!R.allFinite())
    return false;
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

bool all_finite(const Vec3& v)
{
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace graspprior
