#pragma once

#include <optional>
#include <span>
#include <vector>

#include "graspprior/geometry.hpp"
#include "graspprior/gripper_model.hpp"
#include "graspprior/sdf_field.hpp"

namespace graspprior
{

struct ObjectPointCloud
{
  std::vector<Vec3> points;
  /// Either empty or one unit normal per point.
  std::vector<Vec3> normals;
  int object_id = -1;

  bool has_normals() const { return !normals.empty(); }
  std::size_t size() const { return points.size(); }
  void validate() const;
};

struct ContactMapValues
{
  std::vector<double> d;   ///< distance to the nearest contact, m
  std::vector<double> pd;  ///< distance to the line through both contacts, m
};

/// D_i = min(|p_i - c1|, |p_i - c2|)
std::vector<double> contact_map(const ObjectPointCloud& cloud, const Vec3& c1, const Vec3& c2);

/// PD_i = D_i * sin(theta_i), theta_i measured at the nearest contact between p_i - c and
/// the contact line. Throws DegenerateContact when |c1 - c2| < eps_contact.
std::vector<double> projection_contact_map(const ObjectPointCloud& cloud, const Vec3& c1, const Vec3& c2,
                                           double eps_contact = 1e-6);

ContactMapValues contact_maps(const ObjectPointCloud& cloud, const Vec3& c1, const Vec3& c2,
                              double eps_contact = 1e-6);

/// Predicts the preferred contact maps for a grasp on an object.
class ContactPredictor
{
public:
  virtual ~ContactPredictor() = default;
  virtual ContactMapValues predict(std::span<const Vec3> posed_gripper, const ObjectPointCloud& cloud,
                                   const GraspPose& g) const = 0;
};

/// Predicts a grasp quality in [0, 1].
class ScorePredictor
{
public:
  virtual ~ScorePredictor() = default;
  virtual double score(const GraspPose& g) const = 0;
  /// Gradient with respect to (translation, left rotation increment, width), if available.
  virtual std::optional<Vec7> score_grad(const GraspPose&) const { return std::nullopt; }
};

/// Returns the maps of a fixed target grasp, whatever grasp is queried.
class OracleContactPredictor final : public ContactPredictor
{
public:
  OracleContactPredictor(GraspPose target, GripperSpec spec, double eps_contact = 1e-6);

  ContactMapValues predict(std::span<const Vec3> posed_gripper, const ObjectPointCloud& cloud,
                           const GraspPose& g) const override;

  const GraspPose& target() const { return target_; }

private:
  GraspPose target_;
  GripperSpec spec_;
  double eps_contact_;
};

OracleContactPredictor oracle_contact_predictor(const GraspPose& target, const GripperSpec& spec);

/// S = clamp01(1 - r_a / 2) * clamp01(1 - max(0, collision_depth) / 0.01).
/// Degenerate contacts score 0.
class AnalyticScorePredictor final : public ScorePredictor
{
public:
  static constexpr double kPenetrationScale = 0.01;

  AnalyticScorePredictor(PosedGrid object, GripperSpec spec, SceneSdf obstacles, double eps_contact = 1e-6);

  double score(const GraspPose& g) const override;
  std::optional<Vec7> score_grad(const GraspPose& g) const override;

private:
  PosedGrid object_;
  GripperSpec spec_;
  SceneSdf obstacles_;
  double eps_contact_;
};

/// Obstacles default to the object alone.
AnalyticScorePredictor analytic_score_predictor(const PosedGrid& object, const GripperSpec& spec);

}  // namespace graspprior
