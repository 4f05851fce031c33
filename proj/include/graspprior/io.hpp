#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "graspprior/contact_map.hpp"
#include "graspprior/gripper_model.hpp"
#include "graspprior/scene_eval.hpp"

namespace graspprior
{

/// 17 significant digits, enough to round-trip any double.
std::string format_real(double value);

struct RefinedFields
{
  double j_initial = 0.0;
  double j_final = 0.0;
  int iters_used = 0;
};

/// One JSON object per line: object_id, t, R (row-major), w, score, in that key order.
std::string grasp_to_json_line(const GraspPose& g, const RefinedFields* refined = nullptr);
GraspPose grasp_from_json_line(const std::string& line);

void write_grasps(const std::filesystem::path& path, std::span<const GraspPose> grasps,
                  std::span<const RefinedFields> refined = {});
std::vector<GraspPose> read_grasps(const std::filesystem::path& path);

/// CSV with header x,y,z,nx,ny,nz,object_id; normal fields empty when absent.
void write_cloud(const std::filesystem::path& path, const ObjectPointCloud& cloud);
ObjectPointCloud read_cloud(const std::filesystem::path& path);

/// Writes `scene_file` plus obj_<id>.sdf and obj_<id>.csv next to it. Paths inside the
/// scene file are relative to its directory.
void save_scene(const Scene& scene, const std::filesystem::path& scene_file);
Scene load_scene(const std::filesystem::path& scene_file);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace graspprior
