#pragma once

#include <optional>
#include <vector>

#include "graspprior/contact_map.hpp"
#include "graspprior/geometry.hpp"
#include "graspprior/gripper_model.hpp"

namespace graspprior
{

/// Contact-score joint optimization settings.
struct CsjoConfig
{
  double alpha = 0.2;        ///< weight of the projection-map residual
  double beta = 0.01;        ///< weight of the score shortfall
  double gamma = 5.0;        ///< weight of the translation offset, 1/m
  double t_max_score = 1.0;  ///< score ceiling T
  double learning_rate = 1e-3;
  int iterations = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double fd_step = 1e-4;  ///< used only when the score predictor has no gradient
  double eps_contact = 1e-6;

  void validate() const;
};

/// Offsets from the initial grasp: t = t0 + dt, R = exp(daa) R0, w = w0 + dw.
struct PoseParams
{
  Vec3 dt = Vec3::Zero();
  AxisAngle daa = AxisAngle::Zero();
  double dw = 0.0;

  Vec7 to_vector() const;
  static PoseParams from_vector(const Vec7& v);
  bool operator==(const PoseParams&) const = default;
};

GraspPose apply_params(const GraspPose& g0, const PoseParams& params);

struct ObjectiveBreakdown
{
  double j = 0.0;
  double j_c = 0.0;
  double j_s = 0.0;
  double delta_t = 0.0;
};

/// What the objective is evaluated against. All references must outlive the call.
struct CsjoInputs
{
  const ObjectPointCloud& cloud;
  const ContactPredictor& contact_predictor;
  const ScorePredictor& score_predictor;
  const GripperSpec& spec;
};

/// J = J_c + beta * J_s + gamma * |dt|, with
/// J_c = mean|D - D_hat| + alpha * mean|PD - PD_hat| and J_s = T - min(T, S_hat).
ObjectiveBreakdown objective(const PoseParams& params, const GraspPose& g0, const CsjoInputs& in,
                             const CsjoConfig& cfg);

struct ObjectiveEval
{
  ObjectiveBreakdown value;
  Vec7 grad = Vec7::Zero();  ///< with respect to (dt, daa, dw)
};

/// Value and gradient. Predicted maps are held constant; |x| and |dt| take subgradient 0 at 0.
ObjectiveEval objective_value_and_grad(const PoseParams& params, const GraspPose& g0, const CsjoInputs& in,
                                       const CsjoConfig& cfg);

inline Vec7 objective_grad(const PoseParams& params, const GraspPose& g0, const CsjoInputs& in, const CsjoConfig& cfg)
{
  return objective_value_and_grad(params, g0, in, cfg).grad;
}

struct AdamState
{
  Vec7 m = Vec7::Zero();
  Vec7 v = Vec7::Zero();
};

/// One bias-corrected Adam update; `step_index` starts at 1.
Vec7 adam_step(const Vec7& params, const Vec7& grad, AdamState& state, const CsjoConfig& cfg, int step_index);

struct TraceEntry
{
  PoseParams params;
  /// Empty when the iterate was degenerate (contacts or normals undefined, width out of range).
  std::optional<ObjectiveBreakdown> breakdown;
};

struct RefineTrace
{
  std::vector<TraceEntry> entries;  ///< iterations + 1 entries, initial state first
  int best_index = 0;
};

struct RefineResult
{
  GraspPose grasp;
  RefineTrace trace;

  double j_initial() const;
  double j_final() const;
};

/// Adam refinement from params = 0. Returns the iterate with the lowest J (the initial state
/// included), so the returned J never exceeds the initial one.
/// Throws RefinementFailed when every iterate is degenerate.
RefineResult refine(const GraspPose& g0, const CsjoInputs& in, const CsjoConfig& cfg);

}  // namespace graspprior
