#include "graspprior/scene_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "graspprior/error.hpp"
#include "graspprior/parallel.hpp"

namespace graspprior
{

const SceneObject* Scene::find(int id) const
{
  for (const auto& obj : objects)
    if (obj.id == id)
      return &obj;
  return nullptr;
}

const SceneObject& Scene::object(int id) const
{
  if (const SceneObject* obj = find(id))
    return *obj;
  throw Error(ErrorKind::InvalidArgument, "scene has no object " + std::to_string(id));
}

SceneSdf Scene::sdf() const
{
  SceneSdf out;
  out.support_plane = true;
  for (const auto& obj : objects)
    out.objects.push_back(obj.posed());
  return out;
}

namespace
{

Rotation yaw_rotation(double yaw)
{
  return rotation_from_axis_angle(Vec3(0.0, 0.0, yaw));
}

// radius of the footprint circle and the height of the center above the plane
struct Footprint
{
  double radius;
  double rest_height;
};

Footprint footprint(const AnalyticShape& shape)
{
  switch (shape.kind)
  {
    case ShapeKind::Sphere: return {shape.size.x(), shape.size.x()};
    case ShapeKind::Box: return {std::hypot(shape.size.x(), shape.size.y()), shape.size.z()};
    case ShapeKind::Cylinder: return {shape.size.x(), shape.size.y()};
  }
  return {0.0, 0.0};
}

AnalyticShape random_shape(ShapeKind kind, std::mt19937_64& rng)
{
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  switch (kind)
  {
    case ShapeKind::Sphere: return AnalyticShape::sphere(uni(0.02, 0.035));
    case ShapeKind::Box: return AnalyticShape::box(Vec3(uni(0.015, 0.035), uni(0.015, 0.035), uni(0.015, 0.04)));
    case ShapeKind::Cylinder: return AnalyticShape::cylinder(uni(0.015, 0.03), uni(0.02, 0.045));
  }
  throw Error(ErrorKind::InvalidArgument, "unknown shape kind");
}

std::uint64_t object_seed(std::uint64_t scene_seed, int id)
{
  return scene_seed * 1000003ULL + std::uint64_t(id) * 7919ULL + 17ULL;
}

}  // namespace

Scene gen_scene(std::uint64_t seed, const SceneOptions& options)
{
  if (options.n_objects < 1)
    throw Error(ErrorKind::InvalidArgument, "a scene needs at least one object");
  if (options.shape_mix.empty())
    throw Error(ErrorKind::InvalidArgument, "shape mix is empty");

  std::mt19937_64 rng(seed);
  Scene scene;
  scene.seed = seed;
  scene.domain = options.domain;

  struct Placed
  {
    Vec3 center;
    double radius;
  };
  std::vector<Placed> placed;
  int rejections = 0;
  const int max_rejections = 10 * options.n_objects;

  for (int id = 0; id < options.n_objects; ++id)
  {
    std::uniform_int_distribution<std::size_t> pick(0, options.shape_mix.size() - 1);
    AnalyticShape shape = random_shape(options.shape_mix[pick(rng)], rng);
    const Footprint fp = footprint(shape);
    const double yaw = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    const double half = 0.5 * options.domain - fp.radius;
    if (half <= 0.0)
      throw Error(ErrorKind::SceneTooDense, "object does not fit in the placement domain");

    for (;;)
    {
      std::uniform_real_distribution<double> coord(-half, half);
      const Vec3 center(coord(rng), coord(rng), fp.rest_height);
      const bool clear = std::all_of(placed.begin(), placed.end(), [&](const Placed& other) {
        return (center.head<2>() - other.center.head<2>()).norm() >= fp.radius + other.radius + options.min_gap;
      });
      if (clear)
      {
        shape.pose = Pose{yaw_rotation(yaw), center};
        placed.push_back({center, fp.radius});
        break;
      }
      if (++rejections >= max_rejections)
        throw Error(ErrorKind::SceneTooDense, "could not place " + std::to_string(options.n_objects) + " objects");
    }

    SceneObject obj;
    obj.id = id;
    obj.shape = shape;
    AnalyticShape local = shape;
    local.pose = Pose{};
    obj.grid = bake_grid({local}, object_domain(local), options.grid_resolution);
    obj.cloud = sample_surface(shape, options.cloud_points, options.cloud_noise, object_seed(seed, id));
    obj.cloud.object_id = id;
    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

ObjectPointCloud sample_surface(const AnalyticShape& shape, int n, double noise_sigma, std::uint64_t seed)
{
  if (n < 1)
    throw Error(ErrorKind::InvalidArgument, "need at least one surface sample");
  if (!(noise_sigma >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "noise sigma must be non-negative");
  shape.validate();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double pi = std::numbers::pi;

  ObjectPointCloud cloud;
  cloud.points.reserve(std::size_t(n));
  cloud.normals.reserve(std::size_t(n));

  for (int i = 0; i < n; ++i)
  {
    Vec3 p, normal;
    switch (shape.kind)
    {
      case ShapeKind::Sphere:
      {
        Vec3 dir;
        do
        {
          dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
        } while (dir.norm() < 1e-12);
        normal = dir.normalized();
        p = shape.size.x() * normal;
        break;
      }
      case ShapeKind::Box:
      {
        const Vec3& h = shape.size;
        const double areas[3] = {h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};
        const double total = areas[0] + areas[1] + areas[2];
        const double r = unit(rng) * total;
        const int axis = r < areas[0] ? 0 : (r < areas[0] + areas[1] ? 1 : 2);
        const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
        const int a1 = (axis + 1) % 3;
        const int a2 = (axis + 2) % 3;
        p[axis] = side * h[axis];
        p[a1] = (2.0 * unit(rng) - 1.0) * h[a1];
        p[a2] = (2.0 * unit(rng) - 1.0) * h[a2];
        normal = Vec3::Zero();
        normal[axis] = side;
        break;
      }
      case ShapeKind::Cylinder:
      {
        const double radius = shape.size.x();
        const double hh = shape.size.y();
        const double side_area = 4.0 * pi * radius * hh;
        const double cap_area = pi * radius * radius;
        const double r = unit(rng) * (side_area + 2.0 * cap_area);
        if (r < side_area)
        {
          const double phi = 2.0 * pi * unit(rng);
          normal = Vec3(std::cos(phi), std::sin(phi), 0.0);
          p = Vec3(radius * normal.x(), radius * normal.y(), (2.0 * unit(rng) - 1.0) * hh);
        }
        else
        {
          const double side = r < side_area + cap_area ? 1.0 : -1.0;
          const double rho = radius * std::sqrt(unit(rng));
          const double phi = 2.0 * pi * unit(rng);
          p = Vec3(rho * std::cos(phi), rho * std::sin(phi), side * hh);
          normal = Vec3(0.0, 0.0, side);
        }
        break;
      }
    }
    Vec3 world = shape.pose.to_world(p);
    if (noise_sigma > 0.0)
      world += noise_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    cloud.points.push_back(world);
    cloud.normals.push_back(shape.pose.R * normal);
  }
  return cloud;
}

GraspPose grasp_from_pair(const Vec3& c1, const Vec3& c2, const GripperSpec& spec, double clearance,
                          const Vec3& preferred_approach)
{
  const Vec3 closing = (c1 - c2).normalized();
  Vec3 approach = preferred_approach - preferred_approach.dot(closing) * closing;
  for (const Vec3& fallback : {Vec3(Vec3::UnitX()), Vec3(Vec3::UnitY())})
  {
    if (approach.norm() >= 0.1)
      break;
    approach = fallback - fallback.dot(closing) * closing;
  }
  approach.normalize();

  GraspPose g;
  g.R.col(0) = approach;
  g.R.col(1) = closing;
  g.R.col(2) = approach.cross(closing);
  g.R = renormalize(g.R);
  g.w = std::min((c1 - c2).norm() + 2.0 * clearance, spec.w_max);
  g.t = 0.5 * (c1 + c2) - spec.finger_depth * g.R.col(0);
  return g;
}

namespace
{

// index of the partner that makes the most antipodal pair with anchor i, or -1
int best_partner(const ObjectPointCloud& cloud, std::size_t i, double max_dist)
{
  const Vec3& pi = cloud.points[i];
  const Vec3& ni = cloud.normals[i];
  int best = -1;
  double best_q = 0.5;
  for (std::size_t j = 0; j < cloud.size(); ++j)
  {
    if (j == i)
      continue;
    const Vec3 v = cloud.points[j] - pi;
    const double len = v.norm();
    if (len < 1e-3 || len > max_dist)
      continue;
    const Vec3 u = v / len;
    const double q = 1.0 - 0.5 * (u.dot(cloud.normals[j]) - u.dot(ni));
    if (q < best_q)
    {
      best_q = q;
      best = int(j);
    }
  }
  return best;
}

}  // namespace

std::vector<GraspPose> sample_grasp_candidates(const ObjectPointCloud& cloud, int n, const GripperSpec& spec,
                                               std::uint64_t seed, const ScorePredictor& scorer, double clearance)
{
  std::vector<GraspPose> out;
  if (n <= 0)
    return out;
  cloud.validate();
  if (!cloud.has_normals())
    throw Error(ErrorKind::InvalidArgument, "grasp sampling needs point normals");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
  const double reach = spec.w_max - 2.0 * clearance;
  const int max_attempts = 20 * n;
  for (int attempt = 0; attempt < max_attempts && int(out.size()) < n; ++attempt)
  {
    const std::size_t i = pick(rng);
    const int j = best_partner(cloud, i, reach);
    if (j < 0)
      continue;
    GraspPose g = grasp_from_pair(cloud.points[i], cloud.points[std::size_t(j)], spec, clearance);
    g.object_id = cloud.object_id;
    g.score = scorer.score(g);
    out.push_back(g);
  }
  if (out.empty())
    throw Error(ErrorKind::NoCandidates, "no antipodal pair found on object " + std::to_string(cloud.object_id));
  return out;
}

GraspPose nearest_antipodal_target(const ObjectPointCloud& cloud, const GraspPose& g, const GripperSpec& spec,
                                   double clearance)
{
  if (!cloud.has_normals() || cloud.points.empty())
    return g;
  const ContactPositions pos = contacts(spec, g);
  std::size_t anchor = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i)
  {
    const double d = (cloud.points[i] - pos.c1).squaredNorm();
    if (d < best)
    {
      best = d;
      anchor = i;
    }
  }
  const int partner = best_partner(cloud, anchor, spec.w_max - 2.0 * clearance);
  if (partner < 0)
    return g;
  GraspPose target = grasp_from_pair(cloud.points[anchor], cloud.points[std::size_t(partner)], spec, clearance,
                                     g.R.col(0));
  target.score = g.score;
  target.object_id = g.object_id;
  return target;
}

ClosureGeometry closure_geometry(const GraspPose& g, const PosedGrid& object, const GripperSpec& spec,
                                 const SceneSdf& scene, double theta)
{
  ClosureGeometry out;
  ContactPair pair;
  try
  {
    pair = annotate_contacts(contacts(spec, g), object);
  }
  catch (const Error& e)
  {
    if (e.kind() == ErrorKind::DegenerateNormal || e.kind() == ErrorKind::InvalidGrasp)
      return out;
    throw;
  }
  const Vec3 line = pair.c2 - pair.c1;
  if (line.norm() < 1e-6)
    return out;
  if (std::abs(pair.d1) > theta || std::abs(pair.d2) > theta)
    return out;
  if (collision_depth(spec, g, scene) > 0.0)
    return out;

  // jaw 1 pushes along c1 -> c2, jaw 2 the opposite way; compare with inward normals
  const Vec3 f1 = line.normalized();
  const double cos1 = std::clamp(f1.dot(-pair.n1), -1.0, 1.0);
  const double cos2 = std::clamp((-f1).dot(-pair.n2), -1.0, 1.0);
  out.valid = true;
  out.max_cone_angle = std::max(std::acos(cos1), std::acos(cos2));
  return out;
}

bool force_closure_check(const GraspPose& g, const PosedGrid& object, const GripperSpec& spec, double mu_f,
                         const SceneSdf& scene, double theta)
{
  const ClosureGeometry geo = closure_geometry(g, object, spec, scene, theta);
  return geo.valid && geo.max_cone_angle <= std::atan(mu_f);
}

double ap_from_outcomes(const std::vector<bool>& outcomes, int k)
{
  if (k <= 0)
    return 0.0;
  double hits = 0.0;
  double sum = 0.0;
  for (int m = 1; m <= k; ++m)
  {
    if (std::size_t(m) <= outcomes.size() && outcomes[std::size_t(m - 1)])
      hits += 1.0;
    sum += hits / double(m);
  }
  return sum / double(k);
}

std::vector<std::size_t> select_ranked(std::span<const GraspPose> grasps, int k, int cap)
{
  std::vector<std::size_t> order(grasps.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grasps[a].score > grasps[b].score; });

  std::map<int, int> per_object;
  std::vector<std::size_t> kept;
  for (std::size_t idx : order)
  {
    if (int(kept.size()) >= k)
      break;
    int& count = per_object[grasps[idx].object_id];
    if (count >= cap)
      continue;
    ++count;
    kept.push_back(idx);
  }
  return kept;
}

ApReport ap_metric(std::span<const GraspPose> grasps, const Scene& scene, const GripperSpec& spec,
                   const EvalConfig& cfg, int workers)
{
  if (cfg.frictions.empty())
    throw Error(ErrorKind::InvalidArgument, "friction list is empty");
  for (double mu : cfg.frictions)
    if (!(mu > 0.0))
      throw Error(ErrorKind::InvalidArgument, "friction coefficients must be positive");

  ApReport report;
  report.frictions = cfg.frictions;
  report.k = int(scene.objects.size()) * cfg.grasps_per_object_cap;
  for (const auto& obj : scene.objects)
    report.per_object[obj.id] = ObjectReport{0, std::vector<int>(cfg.frictions.size(), 0)};

  const std::vector<std::size_t> kept = select_ranked(grasps, report.k, cfg.grasps_per_object_cap);
  report.n_grasps = int(kept.size());

  const SceneSdf scene_sdf = scene.sdf();
  std::vector<ClosureGeometry> geometry(kept.size());
  parallel_for(kept.size(), workers, [&](std::size_t i) {
    const GraspPose& g = grasps[kept[i]];
    if (const SceneObject* obj = scene.find(g.object_id))
      geometry[i] = closure_geometry(g, obj->posed(), spec, scene_sdf, cfg.theta);
  });

  double total = 0.0;
  for (std::size_t f = 0; f < cfg.frictions.size(); ++f)
  {
    const double cone = std::atan(cfg.frictions[f]);
    std::vector<bool> outcome_bits(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
    {
      const bool ok = geometry[i].valid && geometry[i].max_cone_angle <= cone;
      outcome_bits[i] = ok;
      auto it = report.per_object.find(grasps[kept[i]].object_id);
      if (it != report.per_object.end() && ok)
        ++it->second.successes[f];
    }
    const double ap = ap_from_outcomes(outcome_bits, report.k);
    report.ap_by_friction.push_back(ap);
    total += ap;
  }
  for (std::size_t i = 0; i < kept.size(); ++i)
  {
    auto it = report.per_object.find(grasps[kept[i]].object_id);
    if (it != report.per_object.end())
      ++it->second.n_grasps;
  }
  report.ap = total / double(cfg.frictions.size());
  return report;
}

}  // namespace graspprior
