#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "graspprior/contact_map.hpp"
#include "graspprior/gripper_model.hpp"
#include "graspprior/sdf_field.hpp"

namespace graspprior
{

struct SceneObject
{
  int id = 0;
  AnalyticShape shape;  ///< world pose
  SdfGrid grid;         ///< object frame
  ObjectPointCloud cloud;  ///< world frame

  PosedGrid posed() const { return {&grid, shape.pose}; }
};

/// Objects resting on the support plane z = 0.
/// PosedGrid handles point into `objects`, so a Scene must not be copied while they are in use.
struct Scene
{
  std::uint64_t seed = 0;
  double domain = 0.3;  ///< side of the square placement area centered on the origin, m
  std::vector<SceneObject> objects;

  const SceneObject& object(int id) const;
  const SceneObject* find(int id) const;

  /// All objects plus the support plane.
  SceneSdf sdf() const;
};

struct SceneOptions
{
  int n_objects = 1;
  std::vector<ShapeKind> shape_mix{ShapeKind::Sphere, ShapeKind::Box, ShapeKind::Cylinder};
  double domain = 0.3;
  int grid_resolution = 64;
  int cloud_points = 512;
  double cloud_noise = 0.0;
  double min_gap = 0.01;  ///< horizontal clearance between bounding circles, m
};

/// Deterministic for a fixed seed. Throws SceneTooDense after 10 * n_objects rejected placements.
Scene gen_scene(std::uint64_t seed, const SceneOptions& options);

/// Area-uniform surface samples with exact normals; Gaussian noise is added to the
/// positions after the normals are computed.
ObjectPointCloud sample_surface(const AnalyticShape& shape, int n, double noise_sigma, std::uint64_t seed);

/// Builds a grasp around the contact pair (c1 at +y): closing axis along c1 - c2, approach
/// perpendicular to it and pointing as far down as possible, width = |c1 - c2| + 2 * clearance.
GraspPose grasp_from_pair(const Vec3& c1, const Vec3& c2, const GripperSpec& spec, double clearance,
                          const Vec3& preferred_approach = -Vec3::UnitZ());

/// Heuristic antipodal sampler: random anchor point, best opposing point within reach.
/// Scores come from `scorer`. Throws NoCandidates if no attempt yields a pair.
std::vector<GraspPose> sample_grasp_candidates(const ObjectPointCloud& cloud, int n, const GripperSpec& spec,
                                               std::uint64_t seed, const ScorePredictor& scorer,
                                               double clearance = 0.005);

/// Antipodal pair anchored at the cloud point nearest to g's first contact, keeping g's
/// approach direction as far as possible. Returns g unchanged when no pair is found.
GraspPose nearest_antipodal_target(const ObjectPointCloud& cloud, const GraspPose& g, const GripperSpec& spec,
                                   double clearance = 0.005);

struct ClosureGeometry
{
  bool valid = false;          ///< contacts resolvable, reachable and collision-free
  double max_cone_angle = 0.0; ///< larger angle between closing direction and inward normal, rad
};

/// Friction-independent part of the force-closure test.
ClosureGeometry closure_geometry(const GraspPose& g, const PosedGrid& object, const GripperSpec& spec,
                                 const SceneSdf& scene, double theta = 0.02);

/// Both contacts within |d| <= theta, closing direction inside both friction cones of
/// half-angle atan(mu_f), and no gripper penetration of the scene. Degenerate grasps fail.
bool force_closure_check(const GraspPose& g, const PosedGrid& object, const GripperSpec& spec, double mu_f,
                         const SceneSdf& scene, double theta = 0.02);

struct EvalConfig
{
  std::vector<double> frictions{0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
  int grasps_per_object_cap = 5;
  double theta = 0.02;
};

/// Mean over m = 1..k of Precision@m; outcomes past the end count as failures.
double ap_from_outcomes(const std::vector<bool>& outcomes, int k);

struct ObjectReport
{
  int n_grasps = 0;
  std::vector<int> successes;  ///< per friction
};

struct ApReport
{
  int k = 0;
  int n_grasps = 0;  ///< grasps kept after truncation
  double ap = 0.0;
  std::vector<double> frictions;
  std::vector<double> ap_by_friction;
  std::map<int, ObjectReport> per_object;
};

/// Indices of the grasps kept for evaluation: score-descending (stable), at most `cap` per
/// object, at most k in total.
std::vector<std::size_t> select_ranked(std::span<const GraspPose> grasps, int k, int cap);

/// Object-balanced AP with k = N_object * cap.
ApReport ap_metric(std::span<const GraspPose> grasps, const Scene& scene, const GripperSpec& spec,
                   const EvalConfig& cfg, int workers = 1);

}  // namespace graspprior
