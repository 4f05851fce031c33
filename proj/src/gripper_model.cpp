#include "graspprior/gripper_model.hpp"

#include <algorithm>
#include <cmath>

#include "graspprior/error.hpp"

namespace graspprior
{

std::vector<Vec3> parallel_jaw_samples(double w_max, double finger_depth, double finger_thickness)
{
  const double half_open = 0.5 * w_max;
  const double ft = finger_thickness;
  const double palm_front = -0.04;
  const double finger_tip = finger_depth + ft;

  std::vector<Vec3> samples;
  samples.reserve(256);

  // fingers: 16 stations along x, inner/outer face, two z rows -> 64 per finger
  for (double side : {1.0, -1.0})
    for (int ix = 0; ix < 16; ++ix)
    {
      const double x = palm_front + (finger_tip - palm_front) * double(ix) / 15.0;
      for (double y : {half_open, half_open + ft})
        for (double z : {-0.5 * ft, 0.5 * ft})
          samples.emplace_back(x, side * y, z);
    }

  // palm: 32 stations across y, front/back face, two z rows -> 128
  for (int iy = 0; iy < 32; ++iy)
  {
    const double y = -(half_open + ft) + 2.0 * (half_open + ft) * double(iy) / 31.0;
    for (double x : {palm_front, palm_front - ft})
      for (double z : {-0.5 * ft, 0.5 * ft})
        samples.emplace_back(x, y, z);
  }
  return samples;
}

GripperSpec GripperSpec::default_spec()
{
  GripperSpec spec;
  spec.body_samples = parallel_jaw_samples(spec.w_max, spec.finger_depth, spec.finger_thickness);
  return spec;
}

void GripperSpec::validate() const
{
  if (!(w_max > 0.0) || !(finger_depth >= 0.0) || !(finger_thickness >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "gripper dimensions out of range");
  if (body_samples.empty())
    throw Error(ErrorKind::InvalidArgument, "gripper needs at least one body sample");
  for (const auto& p : body_samples)
    if (!all_finite(p))
      throw Error(ErrorKind::InvalidArgument, "gripper body sample is not finite");
}

void validate_grasp(const GripperSpec& spec, const GraspPose& g)
{
  if (!std::isfinite(g.w) || g.w < 0.0 || g.w > spec.w_max)
    throw Error(ErrorKind::InvalidGrasp, "width " + std::to_string(g.w) + " outside [0, w_max]");
  if (!all_finite(g.t) || !is_rotation(g.R))
    throw Error(ErrorKind::InvalidGrasp, "grasp pose is not a valid rigid transform");
}

ContactPositions contacts(const GripperSpec& spec, const GraspPose& g)
{
  validate_grasp(spec, g);
  const Vec3 l1(spec.finger_depth, 0.5 * g.w, 0.0);
  const Vec3 l2(spec.finger_depth, -0.5 * g.w, 0.0);
  return {g.t + g.R * l1, g.t + g.R * l2};
}

ContactPair annotate_contacts(const ContactPositions& pos, const PosedGrid& object)
{
  ContactPair pair;
  pair.c1 = pos.c1;
  pair.c2 = pos.c2;
  pair.d1 = object.distance(pos.c1);
  pair.d2 = object.distance(pos.c2);
  const Vec3 g1 = object.gradient(pos.c1);
  const Vec3 g2 = object.gradient(pos.c2);
  if (g1.norm() < 1e-9 || g2.norm() < 1e-9)
    throw Error(ErrorKind::DegenerateNormal, "SDF gradient vanishes at a contact");
  pair.n1 = g1.normalized();
  pair.n2 = g2.normalized();
  return pair;
}

Vec7 pose_gradient_from_point(const GraspPose& g, const Vec3& local, const Vec3& d_point)
{
  // p = t + exp(delta) R local  =>  dp/dt = I, dp/ddelta = -[R local]x
  Vec7 out = Vec7::Zero();
  out.segment<3>(0) = d_point;
  out.segment<3>(3) = (g.R * local).cross(d_point);
  return out;
}

Vec7 pose_gradient_from_contacts(const GripperSpec& spec, const GraspPose& g, const Vec3& d_c1, const Vec3& d_c2)
{
  const Vec3 l1(spec.finger_depth, 0.5 * g.w, 0.0);
  const Vec3 l2(spec.finger_depth, -0.5 * g.w, 0.0);
  Vec7 out = pose_gradient_from_point(g, l1, d_c1) + pose_gradient_from_point(g, l2, d_c2);
  const Vec3 half_y = g.R.col(1) * 0.5;
  out[6] = half_y.dot(d_c1) - half_y.dot(d_c2);
  return out;
}

std::vector<Vec3> gripper_cloud(const GripperSpec& spec, const GraspPose& g)
{
  std::vector<Vec3> out;
  out.reserve(spec.body_samples.size());
  for (const auto& p : spec.body_samples)
    out.push_back(g.t + g.R * p);
  return out;
}

double SceneSdf::distance(const Vec3& p) const
{
  double d = std::numeric_limits<double>::infinity();
  for (const auto& obj : objects)
    d = std::min(d, obj.distance(p));
  if (support_plane)
    d = std::min(d, p.z());
  return d;
}

double collision_depth(const GripperSpec& spec, const GraspPose& g, const SceneSdf& scene)
{
  if (scene.objects.empty() && !scene.support_plane)
    return kNoObstacle;
  double depth = kNoObstacle;
  for (const auto& s : spec.body_samples)
    depth = std::max(depth, -scene.distance(g.t + g.R * s));
  return depth;
}

CollisionProbe collision_depth_and_grad(const GripperSpec& spec, const GraspPose& g, const SceneSdf& scene)
{
  CollisionProbe probe;
  if (scene.objects.empty() && !scene.support_plane)
    return probe;

  // deepest sample and the obstacle that defines the scene distance there
  const Vec3* deepest = nullptr;
  const PosedGrid* owner = nullptr;
  for (const auto& s : spec.body_samples)
  {
    const Vec3 p = g.t + g.R * s;
    double d = std::numeric_limits<double>::infinity();
    const PosedGrid* nearest = nullptr;
    for (const auto& obj : scene.objects)
    {
      const double od = obj.distance(p);
      if (od < d)
      {
        d = od;
        nearest = &obj;
      }
    }
    if (scene.support_plane && p.z() < d)
    {
      d = p.z();
      nearest = nullptr;
    }
    if (-d > probe.depth)
    {
      probe.depth = -d;
      deepest = &s;
      owner = nearest;
    }
  }

  const Vec3 p = g.t + g.R * *deepest;
  const Vec3 grad_sdf = owner ? owner->gradient(p) : Vec3::UnitZ();
  probe.grad = pose_gradient_from_point(g, *deepest, -grad_sdf);
  return probe;
}

}  // namespace graspprior
