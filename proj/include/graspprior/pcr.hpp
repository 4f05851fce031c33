#pragma once

#include <span>
#include <vector>

#include "graspprior/geometry.hpp"
#include "graspprior/gripper_model.hpp"
#include "graspprior/sdf_field.hpp"

namespace graspprior
{

/// Physical-constraint regularizer settings. Contacts are driven into the distance band
/// [mu, theta] in front of the surface.
struct PcrConfig
{
  double theta = 0.02;        ///< collision threshold, m
  double mu = 0.005;          ///< surface threshold, m
  double phi = 0.1;           ///< regularizer weight in the total loss
  double eps_contact = 1e-6;  ///< minimum contact separation for the cosine terms, m

  void validate() const;
};

struct PcrTerms
{
  double r_a = 0.0;
  double r_c = 0.0;
  double r_s = 0.0;
  /// Score-weighted value; equals value() until a batch weighting is applied.
  double r_weighted = 0.0;
  /// d(r_a + r_c + r_s) / d(t, rotation increment, w).
  Vec7 grad = Vec7::Zero();

  double value() const { return r_a + r_c + r_s; }
};

/// 1 - 0.5 (cos(c1->c2, n2) + cos(c2->c1, n1)), in [0, 2].
double antipodal_term(const ContactPair& pair, double eps_contact = 1e-6);

struct DistanceTerms
{
  double r_c = 0.0;
  double r_s = 0.0;
};

/// Hinge penalties on the signed contact distances:
/// r_c = sum max(0, theta - d_i), r_s = sum max(0, d_i - mu).
DistanceTerms distance_terms(const ContactPair& pair, const PcrConfig& cfg);

struct WeightedBatch
{
  std::vector<double> per_grasp;
  double mean = 0.0;
};

/// R_i = s_i * term_i / mean(s), mean over the M = terms.size() entries.
/// The weight s_i / mean(s) is rounded to 36 significant bits, which makes R_i invariant
/// under a common rescaling of the scores.
/// Throws ZeroWeight when the scores sum to zero.
WeightedBatch weighted_batch(std::span<const double> terms, std::span<const double> scores);

/// external_loss + phi * R
double total_loss_hook(double external_loss, double regularizer, const PcrConfig& cfg);

/// Values of all three terms and the exact gradient of their sum through the gripper
/// kinematics, the trilinear SDF (including its in-cell Hessian for the normals) and the
/// cosine terms. Hinges take the zero subgradient at their kinks.
PcrTerms pcr_value_and_grad(const GraspPose& g, const GripperSpec& spec, const PosedGrid& object, const PcrConfig& cfg);

struct AntipodalValue
{
  double r_a = 0.0;
  Vec7 grad = Vec7::Zero();
};

/// The antipodal term alone, with its gradient.
AntipodalValue antipodal_value_and_grad(const GraspPose& g, const GripperSpec& spec, const PosedGrid& object,
                                        double eps_contact = 1e-6);

/// Batch evaluation in input order; r_weighted is filled from the batch score weighting.
/// `objects[i]` is the posed grid grasp i is evaluated against.
std::vector<PcrTerms> pcr_batch(std::span<const GraspPose> grasps, const GripperSpec& spec,
                                std::span<const PosedGrid> objects, const PcrConfig& cfg);

}  // namespace graspprior
