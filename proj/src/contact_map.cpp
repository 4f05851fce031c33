#include "graspprior/contact_map.hpp"

#include <algorithm>
#include <cmath>

#include "graspprior/error.hpp"
#include "graspprior/pcr.hpp"

namespace graspprior
{

void ObjectPointCloud::validate() const
{
  if (points.empty())
    throw Error(ErrorKind::InvalidArgument, "point cloud is empty");
  if (!normals.empty() && normals.size() != points.size())
    throw Error(ErrorKind::InvalidArgument, "normal count does not match point count");
  for (const auto& p : points)
    if (!all_finite(p))
      throw Error(ErrorKind::InvalidArgument, "point cloud has non-finite coordinates");
  for (const auto& n : normals)
    if (!all_finite(n) || std::abs(n.norm() - 1.0) > 1e-6)
      throw Error(ErrorKind::InvalidArgument, "point cloud normal is not unit length");
}

std::vector<double> contact_map(const ObjectPointCloud& cloud, const Vec3& c1, const Vec3& c2)
{
  std::vector<double> d;
  d.reserve(cloud.size());
  for (const auto& p : cloud.points)
    d.push_back(std::min((p - c1).norm(), (p - c2).norm()));
  return d;
}

std::vector<double> projection_contact_map(const ObjectPointCloud& cloud, const Vec3& c1, const Vec3& c2,
                                           double eps_contact)
{
  const Vec3 line = c2 - c1;
  if (!(line.norm() >= eps_contact))
    throw Error(ErrorKind::DegenerateContact, "coincident contacts have no contact line");
  const Vec3 dir = line.normalized();

  std::vector<double> pd;
  pd.reserve(cloud.size());
  for (const auto& p : cloud.points)
  {
    const Vec3 r1 = p - c1;
    const Vec3 r2 = p - c2;
    const Vec3& r = r1.norm() <= r2.norm() ? r1 : r2;
    const double dist = r.norm();
    // atan2 keeps sin(theta) accurate when p is nearly on the line
    const double angle = std::atan2(r.cross(dir).norm(), r.dot(dir));
    pd.push_back(dist * std::sin(angle));
  }
  return pd;
}

ContactMapValues contact_maps(const ObjectPointCloud& cloud, const Vec3& c1, const Vec3& c2, double eps_contact)
{
  return {contact_map(cloud, c1, c2), projection_contact_map(cloud, c1, c2, eps_contact)};
}

OracleContactPredictor::OracleContactPredictor(GraspPose target, GripperSpec spec, double eps_contact)
  : target_(std::move(target)), spec_(std::move(spec)), eps_contact_(eps_contact)
{
  validate_grasp(spec_, target_);
}

ContactMapValues OracleContactPredictor::predict(std::span<const Vec3>, const ObjectPointCloud& cloud,
                                                 const GraspPose&) const
{
  const ContactPositions pos = contacts(spec_, target_);
  return contact_maps(cloud, pos.c1, pos.c2, eps_contact_);
}

OracleContactPredictor oracle_contact_predictor(const GraspPose& target, const GripperSpec& spec)
{
  return OracleContactPredictor(target, spec);
}

AnalyticScorePredictor::AnalyticScorePredictor(PosedGrid object, GripperSpec spec, SceneSdf obstacles,
                                               double eps_contact)
  : object_(object), spec_(std::move(spec)), obstacles_(std::move(obstacles)), eps_contact_(eps_contact)
{
}

namespace
{

bool is_degenerate(const Error& e)
{
  return e.kind() == ErrorKind::DegenerateContact || e.kind() == ErrorKind::DegenerateNormal;
}

}  // namespace

double AnalyticScorePredictor::score(const GraspPose& g) const
{
  try
  {
    const AntipodalValue ap = antipodal_value_and_grad(g, spec_, object_, eps_contact_);
    const double alignment = std::clamp(1.0 - 0.5 * ap.r_a, 0.0, 1.0);
    const double depth = collision_depth(spec_, g, obstacles_);
    const double clearance = std::clamp(1.0 - std::max(0.0, depth) / kPenetrationScale, 0.0, 1.0);
    return alignment * clearance;
  }
  catch (const Error& e)
  {
    if (is_degenerate(e))
      return 0.0;
    throw;
  }
}

std::optional<Vec7> AnalyticScorePredictor::score_grad(const GraspPose& g) const
{
  try
  {
    const AntipodalValue ap = antipodal_value_and_grad(g, spec_, object_, eps_contact_);
    const double raw_alignment = 1.0 - 0.5 * ap.r_a;
    const double alignment = std::clamp(raw_alignment, 0.0, 1.0);
    const Vec7 d_alignment = (raw_alignment > 0.0 && raw_alignment < 1.0) ? Vec7(-0.5 * ap.grad) : Vec7::Zero();

    const CollisionProbe probe = collision_depth_and_grad(spec_, g, obstacles_);
    const double raw_clearance = 1.0 - std::max(0.0, probe.depth) / kPenetrationScale;
    const double clearance = std::clamp(raw_clearance, 0.0, 1.0);
    const Vec7 d_clearance =
        (probe.depth > 0.0 && raw_clearance > 0.0) ? Vec7(-probe.grad / kPenetrationScale) : Vec7::Zero();

    return Vec7(clearance * d_alignment + alignment * d_clearance);
  }
  catch (const Error& e)
  {
    if (is_degenerate(e))
      return Vec7::Zero();
    throw;
  }
}

AnalyticScorePredictor analytic_score_predictor(const PosedGrid& object, const GripperSpec& spec)
{
  SceneSdf obstacles;
  obstacles.objects.push_back(object);
  return AnalyticScorePredictor(object, spec, obstacles);
}

}  // namespace graspprior
