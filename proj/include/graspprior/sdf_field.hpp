#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "graspprior/geometry.hpp"

namespace graspprior
{

enum class ShapeKind
{
  Sphere,
  Box,
  Cylinder,
};

const char* to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

/// Rigid transform taking object-frame points to world: x_world = R * x_obj + t.
struct Pose
{
  Rotation R = Rotation::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 to_world(const Vec3& p) const { return R * p + t; }
  Vec3 to_local(const Vec3& p) const { return R.transpose() * (p - t); }
};

/// Primitive solid with an exact (or standard closed-form) signed distance.
///
/// `size` holds the kind-specific parameters:
///   sphere   (radius, -, -)
///   box      (half-extent x, y, z)
///   cylinder (radius, half-height, -), axis along local z
struct AnalyticShape
{
  ShapeKind kind = ShapeKind::Sphere;
  Vec3 size = Vec3::Zero();
  Pose pose;

  static AnalyticShape sphere(double radius, const Pose& pose = {});
  static AnalyticShape box(const Vec3& half_extents, const Pose& pose = {});
  static AnalyticShape cylinder(double radius, double half_height, const Pose& pose = {});

  /// Parameter list as serialized in scene files (1, 3 or 2 entries).
  std::vector<double> params() const;
  static AnalyticShape from_params(ShapeKind kind, const std::vector<double>& params, const Pose& pose);

  void validate() const;
};

struct Aabb
{
  Vec3 lo;
  Vec3 hi;
};

/// Negative inside, positive outside.
double analytic_sdf(const AnalyticShape& shape, const Vec3& p);

/// World-frame axis-aligned bounds of the shape.
Aabb bounding_box(const AnalyticShape& shape);

struct GridDims
{
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const { return std::size_t(nx) * std::size_t(ny) * std::size_t(nz); }
  int operator[](int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  bool operator==(const GridDims&) const = default;
};

/// Cell containing a query point, after clamping. Cells are half-open [lo, hi) per axis,
/// except the last cell on each axis which also owns its upper face.
struct CellIndex
{
  std::array<int, 3> index{};
  std::array<bool, 3> clamped{};

  bool operator==(const CellIndex&) const = default;
};

/// Node-sampled signed distance field with uniform spacing and trilinear interpolation.
///
/// Values are stored as f32, matching the on-disk raster, in x-fastest order
/// (index = ix + nx * (iy + ny * iz)). Node (0,0,0) sits at `origin`.
class SdfGrid
{
public:
  SdfGrid() = default;
  SdfGrid(GridDims dims, Vec3 origin, double spacing, std::vector<float> values, bool clamp_outside = true);

  const GridDims& dims() const { return dims_; }
  const Vec3& origin() const { return origin_; }
  double spacing() const { return spacing_; }
  const std::vector<float>& values() const { return values_; }
  bool clamp_outside() const { return clamp_outside_; }
  void set_clamp_outside(bool clamp) { clamp_outside_ = clamp; }

  Vec3 domain_min() const { return origin_; }
  Vec3 domain_max() const;
  bool contains(const Vec3& p) const;

  float node(int ix, int iy, int iz) const
  {
    return values_[std::size_t(ix) + std::size_t(dims_.nx) * (std::size_t(iy) + std::size_t(dims_.ny) * std::size_t(iz))];
  }
  Vec3 node_position(int ix, int iy, int iz) const;

  double query(const Vec3& p) const;

  /// Exact derivative of the trilinear interpolant inside the owning cell.
  /// Components along clamped axes are zero (flat extension outside the domain).
  Vec3 gradient(const Vec3& p) const;

  /// Derivative of `gradient` inside the owning cell. The interpolant is linear along
  /// each axis, so only the mixed partials are non-zero.
  Mat3 hessian(const Vec3& p) const;

  CellIndex cell_of(const Vec3& p) const;

  bool operator==(const SdfGrid& other) const;

private:
  struct Located
  {
    std::array<int, 3> cell;
    std::array<double, 3> frac;
    std::array<bool, 3> clamped;
  };

  Located locate(const Vec3& p) const;
  double blend(const Located& loc, int dx, int dy, int dz) const;

  GridDims dims_;
  Vec3 origin_ = Vec3::Zero();
  double spacing_ = 0.0;
  std::vector<float> values_;
  bool clamp_outside_ = true;
};

/// Bakes the union of `shapes` (pointwise minimum) on a uniform grid covering `domain`.
/// `resolution` is the node count along the longest domain axis; shorter axes get the
/// same spacing. Every shape's bounds, expanded by two cells, must lie inside the domain.
SdfGrid bake_grid(const std::vector<AnalyticShape>& shapes, const Aabb& domain, int resolution);

/// Domain used for per-object grids: the shape's bounds plus a margin of
/// max(25% of the largest extent, `min_margin`) on every side.
Aabb object_domain(const AnalyticShape& shape, double min_margin = 0.04);

void save_grid(const SdfGrid& grid, const std::filesystem::path& path);
SdfGrid load_grid(const std::filesystem::path& path);

/// An object grid placed in the world. Points are mapped into the object frame before lookup.
struct PosedGrid
{
  const SdfGrid* grid = nullptr;
  Pose pose;

  double distance(const Vec3& p_world) const { return grid->query(pose.to_local(p_world)); }
  Vec3 gradient(const Vec3& p_world) const { return pose.R * grid->gradient(pose.to_local(p_world)); }
  Mat3 hessian(const Vec3& p_world) const
  {
    return pose.R * grid->hessian(pose.to_local(p_world)) * pose.R.transpose();
  }
};

}  // namespace graspprior
