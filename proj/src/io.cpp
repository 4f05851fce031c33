#include "graspprior/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "graspprior/error.hpp"

namespace graspprior
{

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_real(double value)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string read_text(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out)
    throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string grasp_to_json_line(const GraspPose& g, const RefinedFields* refined)
{
  std::string s = "{\"object_id\": " + std::to_string(g.object_id) + ", \"t\": [";
  for (int i = 0; i < 3; ++i)
    s += (i ? ", " : "") + format_real(g.t[i]);
  s += "], \"R\": [";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      s += (r || c ? ", " : "") + format_real(g.R(r, c));
  s += "], \"w\": " + format_real(g.w) + ", \"score\": " + format_real(g.score);
  if (refined)
  {
    s += ", \"j_initial\": " + format_real(refined->j_initial);
    s += ", \"j_final\": " + format_real(refined->j_final);
    s += ", \"iters_used\": " + std::to_string(refined->iters_used);
  }
  s += "}";
  return s;
}

GraspPose grasp_from_json_line(const std::string& line)
{
  GraspPose g;
  try
  {
    const auto j = nlohmann::json::parse(line);
    g.object_id = j.at("object_id").get<int>();
    const auto t = j.at("t").get<std::vector<double>>();
    const auto R = j.at("R").get<std::vector<double>>();
    if (t.size() != 3 || R.size() != 9)
      throw Error(ErrorKind::Format, "grasp needs 3 translation and 9 rotation entries");
    g.t = Vec3(t[0], t[1], t[2]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        g.R(r, c) = R[std::size_t(3 * r + c)];
    g.w = j.at("w").get<double>();
    g.score = j.at("score").get<double>();
  }
  catch (const nlohmann::json::exception& e)
  {
    throw Error(ErrorKind::Format, std::string("bad grasp line: ") + e.what());
  }
  if (!is_rotation(g.R))
  {
    if (!is_rotation(g.R, 1e-6))
      throw Error(ErrorKind::Format, "grasp rotation is not orthonormal");
    g.R = renormalize(g.R);
  }
  return g;
}

void write_grasps(const fs::path& path, std::span<const GraspPose> grasps, std::span<const RefinedFields> refined)
{
  if (!refined.empty() && refined.size() != grasps.size())
    throw Error(ErrorKind::InvalidArgument, "refined fields must match grasps");
  std::string text;
  for (std::size_t i = 0; i < grasps.size(); ++i)
    text += grasp_to_json_line(grasps[i], refined.empty() ? nullptr : &refined[i]) + "\n";
  write_text(path, text);
}

std::vector<GraspPose> read_grasps(const fs::path& path)
{
  std::istringstream in(read_text(path));
  std::vector<GraspPose> out;
  std::string line;
  while (std::getline(in, line))
  {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    out.push_back(grasp_from_json_line(line));
  }
  return out;
}

void write_cloud(const fs::path& path, const ObjectPointCloud& cloud)
{
  std::string text = "x,y,z,nx,ny,nz,object_id\n";
  for (std::size_t i = 0; i < cloud.size(); ++i)
  {
    const Vec3& p = cloud.points[i];
    text += format_real(p.x()) + "," + format_real(p.y()) + "," + format_real(p.z()) + ",";
    if (cloud.has_normals())
    {
      const Vec3& n = cloud.normals[i];
      text += format_real(n.x()) + "," + format_real(n.y()) + "," + format_real(n.z());
    }
    else
    {
      text += ",,";
    }
    text += "," + std::to_string(cloud.object_id) + "\n";
  }
  write_text(path, text);
}

namespace
{

std::vector<std::string> split_csv(const std::string& line)
{
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ','))
    fields.push_back(field);
  if (!line.empty() && line.back() == ',')
    fields.emplace_back();
  return fields;
}

double parse_real(const std::string& text)
{
  try
  {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size())
      throw Error(ErrorKind::Format, "trailing characters in number '" + text + "'");
    return v;
  }
  catch (const std::logic_error&)
  {
    throw Error(ErrorKind::Format, "not a number: '" + text + "'");
  }
}

}  // namespace

ObjectPointCloud read_cloud(const fs::path& path)
{
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::Format, "empty cloud file " + path.string());
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != "x,y,z,nx,ny,nz,object_id")
    throw Error(ErrorKind::Format, "unexpected cloud header in " + path.string());

  ObjectPointCloud cloud;
  bool first = true;
  int missing_normals = 0;
  while (std::getline(in, line))
  {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    const auto f = split_csv(line);
    if (f.size() != 7)
      throw Error(ErrorKind::Format, "cloud row needs 7 fields: " + line);
    cloud.points.emplace_back(parse_real(f[0]), parse_real(f[1]), parse_real(f[2]));
    if (f[3].empty() && f[4].empty() && f[5].empty())
      ++missing_normals;
    else
      cloud.normals.emplace_back(parse_real(f[3]), parse_real(f[4]), parse_real(f[5]));
    const int id = int(parse_real(f[6]));
    if (first)
      cloud.object_id = id;
    else if (id != cloud.object_id)
      throw Error(ErrorKind::Format, "cloud file mixes object ids");
    first = false;
  }
  if (missing_normals != 0 && !cloud.normals.empty())
    throw Error(ErrorKind::Format, "cloud has normals on some rows only");
  try
  {
    cloud.validate();
  }
  catch (const Error& e)
  {
    throw Error(ErrorKind::Format, e.what());
  }
  return cloud;
}

void save_scene(const Scene& scene, const fs::path& scene_file)
{
  const fs::path dir = scene_file.has_parent_path() ? scene_file.parent_path() : fs::path(".");
  fs::create_directories(dir);

  ordered_json j;
  j["seed"] = scene.seed;
  j["domain"] = {{"min", {-0.5 * scene.domain, -0.5 * scene.domain}}, {"max", {0.5 * scene.domain, 0.5 * scene.domain}}};
  j["objects"] = ordered_json::array();
  for (const auto& obj : scene.objects)
  {
    const std::string stem = "obj_" + std::to_string(obj.id);
    save_grid(obj.grid, dir / (stem + ".sdf"));
    write_cloud(dir / (stem + ".csv"), obj.cloud);

    ordered_json o;
    o["id"] = obj.id;
    o["kind"] = to_string(obj.shape.kind);
    o["params"] = obj.shape.params();
    std::vector<double> R;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        R.push_back(obj.shape.pose.R(r, c));
    o["pose_R"] = R;
    o["pose_t"] = {obj.shape.pose.t.x(), obj.shape.pose.t.y(), obj.shape.pose.t.z()};
    o["sdf_path"] = stem + ".sdf";
    o["cloud_path"] = stem + ".csv";
    j["objects"].push_back(o);
  }
  write_text(scene_file, j.dump(2) + "\n");
}

Scene load_scene(const fs::path& scene_file)
{
  const fs::path dir = scene_file.has_parent_path() ? scene_file.parent_path() : fs::path(".");
  Scene scene;
  try
  {
    const auto j = nlohmann::json::parse(read_text(scene_file));
    scene.seed = j.at("seed").get<std::uint64_t>();
    const auto lo = j.at("domain").at("min").get<std::vector<double>>();
    const auto hi = j.at("domain").at("max").get<std::vector<double>>();
    if (lo.size() != 2 || hi.size() != 2)
      throw Error(ErrorKind::Format, "domain needs 2D min and max");
    scene.domain = hi[0] - lo[0];
    for (const auto& o : j.at("objects"))
    {
      SceneObject obj;
      obj.id = o.at("id").get<int>();
      if (scene.find(obj.id))
        throw Error(ErrorKind::Format, "duplicate object id " + std::to_string(obj.id));
      const auto R = o.at("pose_R").get<std::vector<double>>();
      const auto t = o.at("pose_t").get<std::vector<double>>();
      if (R.size() != 9 || t.size() != 3)
        throw Error(ErrorKind::Format, "object pose needs 9 rotation and 3 translation entries");
      Pose pose;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          pose.R(r, c) = R[std::size_t(3 * r + c)];
      pose.t = Vec3(t[0], t[1], t[2]);
      try
      {
        obj.shape = AnalyticShape::from_params(shape_kind_from_string(o.at("kind").get<std::string>()),
                                               o.at("params").get<std::vector<double>>(), pose);
      }
      catch (const Error& e)
      {
        throw Error(ErrorKind::Format, e.what());
      }
      obj.grid = load_grid(dir / o.at("sdf_path").get<std::string>());
      obj.cloud = read_cloud(dir / o.at("cloud_path").get<std::string>());
      obj.cloud.object_id = obj.id;
      scene.objects.push_back(std::move(obj));
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw Error(ErrorKind::Format, std::string("bad scene file: ") + e.what());
  }
  return scene;
}

}  // namespace graspprior
