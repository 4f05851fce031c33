#include "graspprior/gradcheck.hpp"

#include <array>
#include <numbers>
#include <cmath>
#include <cstdint>
#include <random>

#include "json.hpp"

#include "graspprior/contact_map.hpp"
#include "graspprior/csjo.hpp"
#include "graspprior/error.hpp"
#include "graspprior/io.hpp"
#include "graspprior/pcr.hpp"
#include "graspprior/scene_eval.hpp"

namespace graspprior
{

double relative_error(const Vec7& analytic, const Vec7& fd)
{
  return (analytic - fd).norm() / std::max(fd.norm(), 1e-6);
}

namespace
{

Vec3 random_unit(std::mt19937_64& rng)
{
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do
  {
    v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

// distance from `center` to the surface along `dir`, by bisection on the analytic SDF
double surface_along(const AnalyticShape& shape, const Vec3& center, const Vec3& dir)
{
  double lo = 0.0, hi = 0.2;
  for (int i = 0; i < 60; ++i)
  {
    const double mid = 0.5 * (lo + hi);
    (analytic_sdf(shape, center + mid * dir) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GraspPose perturb_pose(const GraspPose& g, int k, double h)
{
  GraspPose out = g;
  if (k < 3)
    out.t[k] += h;
  else if (k < 6)
    out.R = rotation_from_axis_angle(h * Vec3::Unit(k - 3)) * g.R;
  else
    out.w += h;
  return out;
}

struct ContactSignature
{
  CellIndex cell1, cell2;
  std::array<bool, 4> hinges{};
  bool operator==(const ContactSignature&) const = default;
};

ContactSignature signature(const GraspPose& g, const GripperSpec& spec, const PosedGrid& object, const PcrConfig& cfg)
{
  const ContactPositions pos = contacts(spec, g);
  const double d1 = object.distance(pos.c1);
  const double d2 = object.distance(pos.c2);
  return {object.grid->cell_of(object.pose.to_local(pos.c1)),
          object.grid->cell_of(object.pose.to_local(pos.c2)),
          {cfg.theta - d1 > 0.0, d1 - cfg.mu > 0.0, cfg.theta - d2 > 0.0, d2 - cfg.mu > 0.0}};
}

// per cloud point: nearest contact and the signs of both map residuals
std::vector<std::int8_t> map_signature(const GraspPose& g, const GripperSpec& spec, const ObjectPointCloud& cloud,
                                       const ContactMapValues& target)
{
  const ContactPositions pos = contacts(spec, g);
  const ContactMapValues maps = contact_maps(cloud, pos.c1, pos.c2);
  std::vector<std::int8_t> sig(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
  {
    const bool first = (cloud.points[i] - pos.c1).norm() <= (cloud.points[i] - pos.c2).norm();
    sig[i] = std::int8_t((first ? 1 : 0) | (maps.d[i] > target.d[i] ? 2 : 0) | (maps.pd[i] > target.pd[i] ? 4 : 0));
  }
  return sig;
}

bool contacts_inside(const GraspPose& g, const GripperSpec& spec, const PosedGrid& object)
{
  const ContactPositions pos = contacts(spec, g);
  const Vec3 margin = Vec3::Constant(1e-3);
  for (const Vec3& c : {pos.c1, pos.c2})
  {
    const Vec3 local = object.pose.to_local(c);
    if (!object.grid->contains(local - margin) || !object.grid->contains(local + margin))
      return false;
    if (object.gradient(c).norm() < 1e-3)
      return false;
  }
  return true;
}

nlohmann::ordered_json grasp_json(const GraspPose& g)
{
  return nlohmann::ordered_json::parse(grasp_to_json_line(g));
}

nlohmann::ordered_json vec_json(const Vec7& v)
{
  return std::vector<double>(v.data(), v.data() + 7);
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options)
{
  if (options.cases_per_shape < 1)
    throw Error(ErrorKind::InvalidArgument, "gradcheck needs at least one case");

  const GripperSpec spec = GripperSpec::default_spec();
  const PcrConfig pcr_cfg;
  const CsjoConfig csjo_cfg;
  const double h = options.step;
  const double scale = options.corrupt_gradient ? 1.01 : 1.0;

  GradcheckReport report;
  double worst = -1.0;
  nlohmann::ordered_json worst_case;

  const std::array<ShapeKind, 3> kinds{ShapeKind::Sphere, ShapeKind::Box, ShapeKind::Cylinder};
  for (std::size_t s = 0; s < kinds.size(); ++s)
  {
    std::mt19937_64 rng(options.seed * 31ULL + s);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    AnalyticShape local;
    switch (kinds[s])
    {
      case ShapeKind::Sphere: local = AnalyticShape::sphere(0.03); break;
      case ShapeKind::Box: local = AnalyticShape::box(Vec3(0.03, 0.02, 0.025)); break;
      case ShapeKind::Cylinder: local = AnalyticShape::cylinder(0.025, 0.03); break;
    }
    const SdfGrid grid = bake_grid({local}, object_domain(local), options.resolution);
    AnalyticShape world = local;
    world.pose = Pose{rotation_from_axis_angle(std::numbers::pi * 0.9 * random_unit(rng)), 0.1 * Vec3(uni(rng), uni(rng), uni(rng))};
    const PosedGrid object{&grid, world.pose};
    const ObjectPointCloud cloud = sample_surface(world, 256, 0.0, options.seed * 131ULL + s);

    SceneSdf obstacles;
    obstacles.objects.push_back(object);
    const AnalyticScorePredictor scorer(object, spec, obstacles);

    int accepted = 0;
    int draws = 0;
    while (accepted < options.cases_per_shape)
    {
      if (++draws > 200 * options.cases_per_shape)
        throw Error(ErrorKind::InvalidArgument, "could not draw enough non-degenerate gradcheck cases");

      // grasp whose contacts straddle the object near the surface
      const Vec3 u = random_unit(rng);
      const Vec3 center = world.pose.t + 0.008 * Vec3(uni(rng), uni(rng), uni(rng));
      const double s_plus = surface_along(world, center, u);
      const double s_minus = surface_along(world, center, -u);
      const Vec3 mid = center + 0.5 * (s_plus - s_minus) * u;
      const double w = s_plus + s_minus + 0.025 * (1.0 + uni(rng));
      if (w < 0.005 || w > spec.w_max - 0.005)
      {
        ++report.rejected;
        continue;
      }
      GraspPose g = grasp_from_pair(mid + 0.5 * w * u, mid - 0.5 * w * u, spec, 0.0, random_unit(rng));
      g.object_id = 0;
      g.score = 1.0;

      PoseParams params{0.004 * Vec3(uni(rng), uni(rng), uni(rng)), 0.05 * Vec3(uni(rng), uni(rng), uni(rng)),
                        0.003 * uni(rng)};
      GraspPose target = apply_params(g, PoseParams{0.003 * Vec3(uni(rng), uni(rng), uni(rng)),
                                                    0.1 * Vec3(uni(rng), uni(rng), uni(rng)), 0.0});
      const GraspPose g_eval = apply_params(g, params);

      if (!contacts_inside(g, spec, object) || !contacts_inside(g_eval, spec, object) ||
          !contacts_inside(target, spec, object) || target.w > spec.w_max)
      {
        ++report.rejected;
        continue;
      }

      // stencil stability for the pcr check (pose-local perturbations of g)
      const ContactSignature base_sig = signature(g, spec, object, pcr_cfg);
      bool stable = true;
      for (int k = 0; k < 7 && stable; ++k)
        for (double sign : {-1.0, 1.0})
          stable = stable && signature(perturb_pose(g, k, sign * h), spec, object, pcr_cfg) == base_sig;

      // and for the objective (parameter-space perturbations around params)
      const OracleContactPredictor predictor(target, spec);
      const ContactMapValues target_maps = predictor.predict({}, cloud, g_eval);
      const ContactSignature eval_sig = signature(g_eval, spec, object, pcr_cfg);
      const auto eval_map_sig = map_signature(g_eval, spec, cloud, target_maps);
      const Vec7 x0 = params.to_vector();
      for (int k = 0; k < 7 && stable; ++k)
        for (double sign : {-1.0, 1.0})
        {
          Vec7 x = x0;
          x[k] += sign * h;
          const GraspPose gk = apply_params(g, PoseParams::from_vector(x));
          stable = stable && signature(gk, spec, object, pcr_cfg) == eval_sig &&
                   map_signature(gk, spec, cloud, target_maps) == eval_map_sig &&
                   collision_depth(spec, gk, obstacles) < -1e-4;
        }
      if (!stable)
      {
        ++report.rejected;
        continue;
      }

      // pcr gradient vs central differences
      const PcrTerms terms = pcr_value_and_grad(g, spec, object, pcr_cfg);
      Vec7 fd_pcr;
      for (int k = 0; k < 7; ++k)
      {
        const double vp = pcr_value_and_grad(perturb_pose(g, k, h), spec, object, pcr_cfg).value();
        const double vm = pcr_value_and_grad(perturb_pose(g, k, -h), spec, object, pcr_cfg).value();
        fd_pcr[k] = (vp - vm) / (2.0 * h);
      }
      const Vec7 an_pcr = scale * terms.grad;
      const double rel_pcr = relative_error(an_pcr, fd_pcr);

      // objective gradient vs central differences
      const CsjoInputs inputs{cloud, predictor, scorer, spec};
      const Vec7 an_obj = scale * objective_grad(params, g, inputs, csjo_cfg);
      Vec7 fd_obj;
      for (int k = 0; k < 7; ++k)
      {
        Vec7 xp = x0, xm = x0;
        xp[k] += h;
        xm[k] -= h;
        const double jp = objective(PoseParams::from_vector(xp), g, inputs, csjo_cfg).j;
        const double jm = objective(PoseParams::from_vector(xm), g, inputs, csjo_cfg).j;
        fd_obj[k] = (jp - jm) / (2.0 * h);
      }
      const double rel_obj = relative_error(an_obj, fd_obj);

      report.max_rel_pcr = std::max(report.max_rel_pcr, rel_pcr);
      report.max_rel_objective = std::max(report.max_rel_objective, rel_obj);
      const double case_worst = std::max(rel_pcr, rel_obj);
      if (case_worst > options.tolerance)
      {
        report.pass = false;
        if (case_worst > worst)
        {
          worst = case_worst;
          worst_case = nlohmann::ordered_json{
              {"shape", to_string(kinds[s])},
              {"case", accepted},
              {"grasp", grasp_json(g)},
              {"params", vec_json(params.to_vector())},
              {"pcr_analytic", vec_json(an_pcr)},
              {"pcr_fd", vec_json(fd_pcr)},
              {"pcr_rel_error", rel_pcr},
              {"objective_analytic", vec_json(an_obj)},
              {"objective_fd", vec_json(fd_obj)},
              {"objective_rel_error", rel_obj},
          };
        }
      }
      ++accepted;
      ++report.cases;
    }
  }
  if (!report.pass)
    report.offending_case = worst_case.dump();
  return report;
}

}  // namespace graspprior
