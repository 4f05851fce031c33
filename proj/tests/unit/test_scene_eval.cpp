#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "graspprior/error.hpp"
#include "graspprior/io.hpp"
#include "graspprior/pcr.hpp"
#include "graspprior/scene_eval.hpp"

using namespace graspprior;

namespace
{

SceneObject sphere_object(int id, const Vec3& center, double radius)
{
  SceneObject obj;
  obj.id = id;
  obj.shape = AnalyticShape::sphere(radius, Pose{Rotation::Identity(), center});
  AnalyticShape local = obj.shape;
  local.pose = Pose{};
  obj.grid = bake_grid({local}, object_domain(local), 48);
  obj.cloud = sample_surface(obj.shape, 256, 0.0, std::uint64_t(id) + 1);
  obj.cloud.object_id = id;
  return obj;
}

}  // namespace

TEST_CASE("gen_scene determinism")
{
  SceneOptions opt;
  opt.n_objects = 1;
  opt.shape_mix = {ShapeKind::Sphere};
  const Scene a = gen_scene(7, opt);
  const Scene b = gen_scene(7, opt);
  const Scene c = gen_scene(8, opt);
  REQUIRE(a.objects.size() == 1);
  CHECK(a.objects[0].shape.pose.t == b.objects[0].shape.pose.t);
  CHECK(a.objects[0].grid == b.objects[0].grid);
  CHECK(a.objects[0].cloud.points == b.objects[0].cloud.points);
  CHECK(a.objects[0].shape.pose.t != c.objects[0].shape.pose.t);

  const auto dir = std::filesystem::temp_directory_path() / "graspprior_unit_scene_det";
  save_scene(a, dir / "a" / "scene.json");
  save_scene(b, dir / "b" / "scene.json");
  for (const char* f : {"scene.json", "obj_0.sdf", "obj_0.csv"})
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
  std::filesystem::remove_all(dir);
}

TEST_CASE("gen_scene: objects rest on the plane and keep clear of each other")
{
  SceneOptions opt;
  opt.n_objects = 5;
  for (std::uint64_t seed : {0u, 1u, 2u})
  {
    const Scene scene = gen_scene(seed, opt);
    REQUIRE(scene.objects.size() == 5);
    for (const auto& obj : scene.objects)
    {
      CHECK(bounding_box(obj.shape).lo.z() == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
      CHECK(std::abs(obj.shape.pose.t.x()) <= 0.15);
      CHECK(std::abs(obj.shape.pose.t.y()) <= 0.15);
      for (const auto& other : scene.objects)
        if (other.id != obj.id)
          for (const Vec3& p : obj.cloud.points)
            REQUIRE(analytic_sdf(other.shape, p) >= 0.0);
    }
  }
  opt.n_objects = 200;
  try
  {
    gen_scene(0, opt);
    FAIL("expected scene too dense");
  }
  catch (const Error& e)
  {
    CHECK(e.kind() == ErrorKind::SceneTooDense);
  }
}

TEST_CASE("sample_surface")
{
  const Vec3 center(0.1, -0.05, 0.03);
  const double r = 0.03;
  const AnalyticShape sphere = AnalyticShape::sphere(r, Pose{Rotation::Identity(), center});
  SUBCASE("exact sphere samples")
  {
    const ObjectPointCloud c = sample_surface(sphere, 2000, 0.0, 1);
    REQUIRE(c.size() == 2000);
    for (std::size_t i = 0; i < c.size(); ++i)
    {
      REQUIRE(std::abs((c.points[i] - center).norm() - r) <= 1e-12);
      REQUIRE((c.normals[i] - (c.points[i] - center) / r).norm() <= 1e-12);
    }
  }
  SUBCASE("noise level")
  {
    const ObjectPointCloud c = sample_surface(sphere, 10000, 0.002, 2);
    double sum = 0.0, sum2 = 0.0;
    for (const Vec3& p : c.points)
    {
      const double e = (p - center).norm() - r;
      sum += e;
      sum2 += e * e;
    }
    const double mean = sum / 10000.0;
    const double sd = std::sqrt(sum2 / 10000.0 - mean * mean);
    CHECK(sd >= 0.0015);
    CHECK(sd <= 0.0025);
  }
  SUBCASE("box and cylinder samples lie on the surface")
  {
    const Pose pose{rotation_from_axis_angle(AxisAngle(0.2, -0.3, 0.5)), Vec3(0.01, 0.02, 0.03)};
    for (const AnalyticShape& s :
         {AnalyticShape::box(Vec3(0.03, 0.02, 0.01), pose), AnalyticShape::cylinder(0.02, 0.04, pose)})
    {
      const ObjectPointCloud c = sample_surface(s, 1000, 0.0, 3);
      for (std::size_t i = 0; i < c.size(); ++i)
      {
        REQUIRE(std::abs(analytic_sdf(s, c.points[i])) <= 1e-12);
        REQUIRE(std::abs(c.normals[i].norm() - 1.0) <= 1e-12);
        // the normal points outward
        REQUIRE(analytic_sdf(s, c.points[i] + 1e-4 * c.normals[i]) > 0.0);
      }
    }
  }
  SUBCASE("deterministic")
  {
    CHECK(sample_surface(sphere, 100, 0.001, 9).points == sample_surface(sphere, 100, 0.001, 9).points);
  }
}

TEST_CASE("sample_grasp_candidates on a sphere")
{
  const AnalyticShape sphere = AnalyticShape::sphere(0.03);
  const SdfGrid grid = bake_grid({sphere}, object_domain(sphere), 64);
  const PosedGrid object{&grid, Pose{}};
  const GripperSpec spec = GripperSpec::default_spec();
  const ObjectPointCloud cloud = sample_surface(sphere, 512, 0.0, 4);
  const AnalyticScorePredictor scorer = analytic_score_predictor(object, spec);

  const auto grasps = sample_grasp_candidates(cloud, 30, spec, 11, scorer);
  REQUIRE(grasps.size() == 30);
  for (const auto& g : grasps)
  {
    CHECK(antipodal_term(annotate_contacts(contacts(spec, g), object)) <= 0.2);
    CHECK(g.score == scorer.score(g));
    CHECK(g.w <= spec.w_max);
  }
  CHECK(sample_grasp_candidates(cloud, 0, spec, 11, scorer).empty());
  const auto again = sample_grasp_candidates(cloud, 30, spec, 11, scorer);
  for (std::size_t i = 0; i < grasps.size(); ++i)
  {
    CHECK(again[i].t == grasps[i].t);
    CHECK(again[i].R == grasps[i].R);
    CHECK(again[i].w == grasps[i].w);
  }
}

TEST_CASE("force_closure_check")
{
  const double r = 0.03;
  Scene scene;
  scene.objects.push_back(sphere_object(0, Vec3(0, 0, r), r));
  const GripperSpec spec = GripperSpec::default_spec();
  const SceneObject& obj = scene.objects[0];
  const Vec3 o = obj.shape.pose.t;

  SUBCASE("diametric grasp succeeds")
  {
    const GraspPose g = grasp_from_pair(o + r * Vec3::UnitX(), o - r * Vec3::UnitX(), spec, 0.01);
    CHECK(force_closure_check(g, obj.posed(), spec, 0.4, scene.sdf()));
  }
  SUBCASE("30 degree misalignment fails inside a 21.8 degree cone")
  {
    const double rho = r + 0.01;
    const double angle = std::numbers::pi / 6.0;
    const Vec3 c1 = o + rho * std::sin(angle) * Vec3::UnitY() + rho * std::cos(angle) * Vec3::UnitX();
    const Vec3 c2 = o + rho * std::sin(angle) * Vec3::UnitY() - rho * std::cos(angle) * Vec3::UnitX();
    const GraspPose g = grasp_from_pair(c1, c2, spec, 0.0);
    const ClosureGeometry geo = closure_geometry(g, obj.posed(), spec, scene.sdf());
    CHECK(geo.valid);
    CHECK(geo.max_cone_angle == doctest::Approx(angle).epsilon(0.03));
    CHECK(std::atan(0.4) == doctest::Approx(21.8 * std::numbers::pi / 180.0).epsilon(1e-3));
    CHECK_FALSE(force_closure_check(g, obj.posed(), spec, 0.4, scene.sdf()));
    CHECK(force_closure_check(g, obj.posed(), spec, 1.2, scene.sdf()));
  }
  SUBCASE("gripper body in a neighbour fails")
  {
    Scene crowded;
    crowded.objects.push_back(sphere_object(0, o, r));
    crowded.objects.push_back(sphere_object(1, Vec3(0.072, 0.0, 0.02), 0.02));
    const GraspPose g = grasp_from_pair(o + r * Vec3::UnitX(), o - r * Vec3::UnitX(), spec, 0.01);
    CHECK(collision_depth(spec, g, crowded.sdf()) > 0.0);
    CHECK_FALSE(force_closure_check(g, crowded.objects[0].posed(), spec, 0.4, crowded.sdf()));
  }
  SUBCASE("unreachable contacts fail")
  {
    GraspPose g = grasp_from_pair(o + r * Vec3::UnitX(), o - r * Vec3::UnitX(), spec, 0.01);
    g.t.z() += 0.1;
    CHECK_FALSE(force_closure_check(g, obj.posed(), spec, 1.2, scene.sdf()));
  }
  SUBCASE("property: cone nesting")
  {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int i = 0; i < 100; ++i)
    {
      GraspPose g = grasp_from_pair(o + r * Vec3::UnitX(), o - r * Vec3::UnitX(), spec, 0.01);
      g.R = rotation_from_axis_angle(0.5 * AxisAngle(uni(rng), uni(rng), uni(rng))) * g.R;
      g.t += 0.01 * Vec3(uni(rng), uni(rng), uni(rng));
      bool prev = false;
      for (double mu : {0.2, 0.4, 0.6, 0.8, 1.0, 1.2})
      {
        const bool ok = force_closure_check(g, obj.posed(), spec, mu, scene.sdf());
        CHECK((!prev || ok));
        prev = ok;
      }
    }
  }
}

TEST_CASE("ap_from_outcomes")
{
  CHECK(ap_from_outcomes({true, true}, 2) == 1.0);
  CHECK(ap_from_outcomes({false, false}, 2) == 0.0);
  CHECK(ap_from_outcomes({true, false, true}, 3) == doctest::Approx(13.0 / 18.0).epsilon(1e-15));
  // padding with failures
  CHECK(ap_from_outcomes({true}, 2) == doctest::Approx(0.75));
  CHECK(ap_from_outcomes({}, 4) == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(1, 25);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial)
  {
    std::vector<bool> out(std::size_t(len(rng)));
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = coin(rng);
    const int k = int(out.size());
    const double base = ap_from_outcomes(out, k);
    for (std::size_t i = 0; i < out.size(); ++i)
      if (!out[i])
      {
        auto flipped = out;
        flipped[i] = true;
        CHECK(ap_from_outcomes(flipped, k) >= base);
      }
  }
}

TEST_CASE("select_ranked")
{
  std::vector<GraspPose> g(9);
  const double scores[] = {0.5, 0.9, 0.9, 0.1, 0.7, 0.9, 0.3, 0.8, 0.2};
  for (int i = 0; i < 9; ++i)
  {
    g[std::size_t(i)].score = scores[i];
    g[std::size_t(i)].object_id = i < 6 ? 0 : 1;
  }
  // object 0 capped at 2; ties keep input order
  CHECK(select_ranked(g, 10, 2) == std::vector<std::size_t>{1, 2, 7, 6});
  CHECK(select_ranked(g, 3, 5) == std::vector<std::size_t>{1, 2, 5});
}

TEST_CASE("ap_metric")
{
  const double r = 0.03;
  const GripperSpec spec = GripperSpec::default_spec();
  Scene scene;
  scene.objects.push_back(sphere_object(0, Vec3(0, 0, r), r));
  scene.objects.push_back(sphere_object(1, Vec3(0.15, 0, r), r));

  auto good = [&](int id, double score) {
    const Vec3 o = scene.objects[std::size_t(id)].shape.pose.t;
    GraspPose g = grasp_from_pair(o + r * Vec3::UnitY(), o - r * Vec3::UnitY(), spec, 0.01);
    g.object_id = id;
    g.score = score;
    return g;
  };

  SUBCASE("empty list")
  {
    const ApReport rep = ap_metric({}, scene, spec, EvalConfig{});
    CHECK(rep.ap == 0.0);
    CHECK(rep.k == 10);
  }
  SUBCASE("successes on both objects, padded to k")
  {
    const std::vector<GraspPose> grasps{good(0, 0.9), good(1, 0.8)};
    for (int workers : {1, 4})
    {
      const ApReport rep = ap_metric(grasps, scene, spec, EvalConfig{}, workers);
      CHECK(rep.n_grasps == 2);
      CHECK(rep.ap == ap_from_outcomes({true, true}, 10));
      CHECK(rep.per_object.at(0).successes == std::vector<int>(6, 1));
    }
  }
  SUBCASE("single friction equals its AP_mu")
  {
    std::vector<GraspPose> grasps{good(0, 0.9), good(1, 0.8), good(0, 0.7)};
    grasps[1].t.z() += 0.1;
    EvalConfig cfg;
    cfg.frictions = {0.4};
    const ApReport rep = ap_metric(grasps, scene, spec, cfg);
    CHECK(rep.ap == rep.ap_by_friction[0]);
    CHECK(rep.ap == ap_from_outcomes({true, false, true}, 10));
  }
  SUBCASE("unknown object counts as a failure")
  {
    GraspPose stray = good(0, 0.95);
    stray.object_id = 42;
    const ApReport rep = ap_metric(std::vector<GraspPose>{stray, good(0, 0.5)}, scene, spec, EvalConfig{});
    CHECK(rep.ap == ap_from_outcomes({false, true}, 10));
  }
}
