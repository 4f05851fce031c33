#include "graspprior/csjo.hpp"

#include <cmath>
#include <limits>

#include "graspprior/error.hpp"

namespace graspprior
{

void CsjoConfig::validate() const
{
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "alpha, beta and gamma must be non-negative");
  if (!(t_max_score > 0.0))
    throw Error(ErrorKind::InvalidArgument, "t_max_score must be positive");
  if (iterations < 0)
    throw Error(ErrorKind::InvalidArgument, "iterations must be non-negative");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw Error(ErrorKind::InvalidArgument, "Adam decay rates must lie in (0, 1)");
  if (!(adam_eps > 0.0) || !(learning_rate > 0.0) || !(fd_step > 0.0))
    throw Error(ErrorKind::InvalidArgument, "learning rate, epsilon and fd step must be positive");
}

Vec7 PoseParams::to_vector() const
{
  Vec7 v;
  v << dt, daa, dw;
  return v;
}

PoseParams PoseParams::from_vector(const Vec7& v)
{
  return {v.segment<3>(0), v.segment<3>(3), v[6]};
}

GraspPose apply_params(const GraspPose& g0, const PoseParams& params)
{
  GraspPose g = g0;
  g.t = g0.t + params.dt;
  g.R = renormalize(rotation_from_axis_angle(params.daa) * g0.R);
  g.w = g0.w + params.dw;
  return g;
}

namespace
{

double sign_of(double x)
{
  return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

struct MapResidual
{
  double j_c = 0.0;
  Vec3 d_c1 = Vec3::Zero();
  Vec3 d_c2 = Vec3::Zero();
};

// J_c and its gradient with respect to both contacts.
MapResidual map_residual(const ObjectPointCloud& cloud, const ContactPositions& pos, const ContactMapValues& target,
                         double alpha, double eps_contact, bool with_grad)
{
  const ContactMapValues actual = contact_maps(cloud, pos.c1, pos.c2, eps_contact);
  if (target.d.size() != cloud.size() || target.pd.size() != cloud.size())
    throw Error(ErrorKind::InvalidArgument, "predicted contact maps do not match the cloud");

  const double n = double(cloud.size());
  double sum_d = 0.0;
  double sum_pd = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
  {
    sum_d += std::abs(actual.d[i] - target.d[i]);
    sum_pd += std::abs(actual.pd[i] - target.pd[i]);
  }
  MapResidual out;
  out.j_c = sum_d / n + alpha * (sum_pd / n);
  if (!with_grad)
    return out;

  const Vec3 line = pos.c2 - pos.c1;
  const double len = line.norm();
  const Vec3 dir = line / len;
  for (std::size_t i = 0; i < cloud.size(); ++i)
  {
    const Vec3& p = cloud.points[i];

    const double sd = sign_of(actual.d[i] - target.d[i]) / n;
    if (sd != 0.0 && actual.d[i] > 0.0)
    {
      const Vec3 r1 = p - pos.c1;
      const Vec3 r2 = p - pos.c2;
      if (r1.norm() <= r2.norm())
        out.d_c1 -= sd * r1 / actual.d[i];
      else
        out.d_c2 -= sd * r2 / actual.d[i];
    }

    const double spd = alpha * sign_of(actual.pd[i] - target.pd[i]) / n;
    if (spd != 0.0)
    {
      // perpendicular offset from the line; PD is its norm
      const Vec3 a = p - pos.c1;
      const double along = a.dot(dir);
      const Vec3 q = a - along * dir;
      const double qn = q.norm();
      if (qn > 0.0)
      {
        const Vec3 q_hat = q / qn;
        out.d_c1 -= spd * (1.0 - along / len) * q_hat;
        out.d_c2 -= spd * (along / len) * q_hat;
      }
    }
  }
  return out;
}

Vec7 local_to_params(const Vec7& local, const PoseParams& params)
{
  Vec7 out = local;
  out.segment<3>(3) = left_jacobian(params.daa).transpose() * local.segment<3>(3);
  return out;
}

ObjectiveEval evaluate(const PoseParams& params, const GraspPose& g0, const CsjoInputs& in, const CsjoConfig& cfg,
                       bool with_grad)
{
  const GraspPose g = apply_params(g0, params);
  const ContactPositions pos = contacts(in.spec, g);
  const std::vector<Vec3> posed_gripper = gripper_cloud(in.spec, g);
  const ContactMapValues target = in.contact_predictor.predict(posed_gripper, in.cloud, g);
  const MapResidual maps = map_residual(in.cloud, pos, target, cfg.alpha, cfg.eps_contact, with_grad);

  const double s_hat = in.score_predictor.score(g);

  ObjectiveEval out;
  ObjectiveBreakdown& b = out.value;
  b.j_c = maps.j_c;
  b.j_s = cfg.t_max_score - std::min(cfg.t_max_score, s_hat);
  b.delta_t = params.dt.norm();
  b.j = b.j_c + cfg.beta * b.j_s + cfg.gamma * b.delta_t;
  if (!with_grad)
    return out;

  Vec7 local = pose_gradient_from_contacts(in.spec, g, maps.d_c1, maps.d_c2);
  Vec7 direct = Vec7::Zero();

  if (s_hat < cfg.t_max_score && cfg.beta > 0.0)
  {
    if (const auto sg = in.score_predictor.score_grad(g))
    {
      local -= cfg.beta * *sg;
    }
    else
    {
      // central differences of J_s in parameter space
      const Vec7 base = params.to_vector();
      for (int k = 0; k < 7; ++k)
      {
        Vec7 hi = base, lo = base;
        hi[k] += cfg.fd_step;
        lo[k] -= cfg.fd_step;
        const double s_hi = in.score_predictor.score(apply_params(g0, PoseParams::from_vector(hi)));
        const double s_lo = in.score_predictor.score(apply_params(g0, PoseParams::from_vector(lo)));
        const double js_hi = cfg.t_max_score - std::min(cfg.t_max_score, s_hi);
        const double js_lo = cfg.t_max_score - std::min(cfg.t_max_score, s_lo);
        direct[k] += cfg.beta * (js_hi - js_lo) / (2.0 * cfg.fd_step);
      }
    }
  }

  if (b.delta_t > 0.0)
    direct.segment<3>(0) += cfg.gamma * params.dt / b.delta_t;

  out.grad = local_to_params(local, params) + direct;
  return out;
}

bool is_degenerate_iterate(const Error& e)
{
  return e.kind() == ErrorKind::DegenerateContact || e.kind() == ErrorKind::DegenerateNormal ||
         e.kind() == ErrorKind::InvalidGrasp;
}

}  // namespace

ObjectiveBreakdown objective(const PoseParams& params, const GraspPose& g0, const CsjoInputs& in,
                             const CsjoConfig& cfg)
{
  return evaluate(params, g0, in, cfg, false).value;
}

ObjectiveEval objective_value_and_grad(const PoseParams& params, const GraspPose& g0, const CsjoInputs& in,
                                       const CsjoConfig& cfg)
{
  return evaluate(params, g0, in, cfg, true);
}

Vec7 adam_step(const Vec7& params, const Vec7& grad, AdamState& state, const CsjoConfig& cfg, int step_index)
{
  if (step_index < 1)
    throw Error(ErrorKind::InvalidArgument, "Adam step index starts at 1");
  state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grad;
  state.v = cfg.adam_beta2 * state.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, step_index);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, step_index);
  Vec7 out = params;
  for (int k = 0; k < 7; ++k)
  {
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    out[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
  return out;
}

double RefineResult::j_initial() const
{
  const auto& b = trace.entries.front().breakdown;
  return b ? b->j : std::numeric_limits<double>::quiet_NaN();
}

double RefineResult::j_final() const
{
  const auto& b = trace.entries[std::size_t(trace.best_index)].breakdown;
  return b ? b->j : std::numeric_limits<double>::quiet_NaN();
}

RefineResult refine(const GraspPose& g0, const CsjoInputs& in, const CsjoConfig& cfg)
{
  cfg.validate();
  in.cloud.validate();

  RefineResult result;
  RefineTrace& trace = result.trace;
  trace.entries.reserve(std::size_t(cfg.iterations) + 1);

  AdamState state;
  Vec7 x = Vec7::Zero();
  Vec7 grad = Vec7::Zero();
  double best_j = std::numeric_limits<double>::infinity();
  trace.best_index = -1;

  for (int k = 0; k <= cfg.iterations; ++k)
  {
    if (k > 0)
      x = adam_step(x, grad, state, cfg, k);
    const PoseParams params = PoseParams::from_vector(x);
    TraceEntry entry{params, std::nullopt};
    // a degenerate iterate contributes a zero gradient; momentum carries the optimizer on
    grad.setZero();
    try
    {
      const bool need_grad = k < cfg.iterations;
      const ObjectiveEval eval = evaluate(params, g0, in, cfg, need_grad);
      entry.breakdown = eval.value;
      grad = eval.grad;
      if (eval.value.j < best_j)
      {
        best_j = eval.value.j;
        trace.best_index = k;
      }
    }
    catch (const Error& e)
    {
      if (!is_degenerate_iterate(e))
        throw;
    }
    trace.entries.push_back(entry);
  }

  if (trace.best_index < 0)
    throw Error(ErrorKind::RefinementFailed, "every iterate was degenerate");

  if (trace.best_index == 0)
    result.grasp = g0;
  else
    result.grasp = apply_params(g0, trace.entries[std::size_t(trace.best_index)].params);
  return result;
}

}  // namespace graspprior
