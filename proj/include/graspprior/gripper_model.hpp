#pragma once

#include <limits>
#include <vector>

#include "graspprior/geometry.hpp"
#include "graspprior/sdf_field.hpp"

namespace graspprior
{

/// Parallel-jaw grasp. Gripper frame: x is the approach axis, y the closing axis,
/// origin at the gripper base.
struct GraspPose
{
  Vec3 t = Vec3::Zero();
  Rotation R = Rotation::Identity();
  double w = 0.0;
  double score = 0.0;
  int object_id = -1;
};

struct GripperSpec
{
  double w_max = 0.10;
  double finger_depth = 0.02;
  double finger_thickness = 0.01;
  std::vector<Vec3> body_samples;

  /// 0.10 m stroke, 0.02 m finger depth, 0.01 m fingers; 256 body samples.
  static GripperSpec default_spec();

  void validate() const;
};

/// Points on the fully opened fingers and the palm, in the gripper frame. The fingers sit
/// at +-w_max/2 regardless of the commanded width, i.e. the silhouette swept on approach.
std::vector<Vec3> parallel_jaw_samples(double w_max, double finger_depth, double finger_thickness);

/// Throws InvalidGrasp when the width is outside [0, w_max] or the pose is malformed.
void validate_grasp(const GripperSpec& spec, const GraspPose& g);

struct ContactPositions
{
  Vec3 c1;
  Vec3 c2;
};

struct ContactPair
{
  Vec3 c1;
  Vec3 c2;
  Vec3 n1;
  Vec3 n2;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Pad centers at (finger_depth, +w/2, 0) for c1 and (finger_depth, -w/2, 0) for c2,
/// mapped to world by (R, t).
ContactPositions contacts(const GripperSpec& spec, const GraspPose& g);

/// Fills SDF distances and outward unit normals at both contacts.
/// Throws DegenerateNormal when the field gradient vanishes at a contact.
ContactPair annotate_contacts(const ContactPositions& pos, const PosedGrid& object);

/// Chain rule from contact-space gradients to the local pose parameters
/// (translation, left rotation increment at the current R, width).
Vec7 pose_gradient_from_contacts(const GripperSpec& spec, const GraspPose& g, const Vec3& d_c1, const Vec3& d_c2);

/// Same chain rule for a single rigidly attached point with gripper-frame offset `local`.
Vec7 pose_gradient_from_point(const GraspPose& g, const Vec3& local, const Vec3& d_point);

std::vector<Vec3> gripper_cloud(const GripperSpec& spec, const GraspPose& g);

/// Everything the gripper body can collide with: posed object grids and, optionally,
/// the support half-space z <= 0.
struct SceneSdf
{
  std::vector<PosedGrid> objects;
  bool support_plane = false;

  /// Minimum signed distance over all obstacles; +inf when there are none.
  double distance(const Vec3& p) const;
};

constexpr double kNoObstacle = -std::numeric_limits<double>::infinity();

/// Maximum penetration of the gripper body, max over samples of -SDF_scene.
/// Negative values mean clearance; kNoObstacle for an empty scene.
double collision_depth(const GripperSpec& spec, const GraspPose& g, const SceneSdf& scene);

struct CollisionProbe
{
  double depth = kNoObstacle;
  /// Gradient of `depth` with respect to the pose parameters at the deepest sample.
  Vec7 grad = Vec7::Zero();
};

CollisionProbe collision_depth_and_grad(const GripperSpec& spec, const GraspPose& g, const SceneSdf& scene);

}  // namespace graspprior
