#include "graspprior/sdf_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "graspprior/error.hpp"

namespace graspprior
{

const char* to_string(ShapeKind kind)
{
  switch (kind)
  {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Box: return "box";
    case ShapeKind::Cylinder: return "cylinder";
  }
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& name)
{
  if (name == "sphere")
    return ShapeKind::Sphere;
  if (name == "box")
    return ShapeKind::Box;
  if (name == "cylinder")
    return ShapeKind::Cylinder;
  throw Error(ErrorKind::Format, "unknown shape kind '" + name + "'");
}

AnalyticShape AnalyticShape::sphere(double radius, const Pose& pose)
{
  AnalyticShape s{ShapeKind::Sphere, Vec3(radius, 0.0, 0.0), pose};
  s.validate();
  return s;
}

AnalyticShape AnalyticShape::box(const Vec3& half_extents, const Pose& pose)
{
  AnalyticShape s{ShapeKind::Box, half_extents, pose};
  s.validate();
  return s;
}

AnalyticShape AnalyticShape::cylinder(double radius, double half_height, const Pose& pose)
{
  AnalyticShape s{ShapeKind::Cylinder, Vec3(radius, half_height, 0.0), pose};
  s.validate();
  return s;
}

std::vector<double> AnalyticShape::params() const
{
  switch (kind)
  {
    case ShapeKind::Sphere: return {size.x()};
    case ShapeKind::Box: return {size.x(), size.y(), size.z()};
    case ShapeKind::Cylinder: return {size.x(), size.y()};
  }
  return {};
}

AnalyticShape AnalyticShape::from_params(ShapeKind kind, const std::vector<double>& params, const Pose& pose)
{
  const std::size_t expected = kind == ShapeKind::Sphere ? 1 : (kind == ShapeKind::Box ? 3 : 2);
  if (params.size() != expected)
    throw Error(ErrorKind::Format, std::string("wrong parameter count for ") + to_string(kind));
  switch (kind)
  {
    case ShapeKind::Sphere: return sphere(params[0], pose);
    case ShapeKind::Box: return box(Vec3(params[0], params[1], params[2]), pose);
    case ShapeKind::Cylinder: return cylinder(params[0], params[1], pose);
  }
  throw Error(ErrorKind::Format, "unknown shape kind");
}

void AnalyticShape::validate() const
{
  const int used = kind == ShapeKind::Sphere ? 1 : (kind == ShapeKind::Box ? 3 : 2);
  for (int i = 0; i < used; ++i)
    if (!(size[i] > 0.0) || !std::isfinite(size[i]))
      throw Error(ErrorKind::InvalidArgument, "shape size parameters must be positive and finite");
  if (!is_rotation(pose.R) || !all_finite(pose.t))
    throw Error(ErrorKind::InvalidArgument, "shape pose is not a valid rigid transform");
}

double analytic_sdf(const AnalyticShape& shape, const Vec3& p)
{
  const Vec3 q = shape.pose.to_local(p);
  switch (shape.kind)
  {
    case ShapeKind::Sphere:
      return q.norm() - shape.size.x();
    case ShapeKind::Box:
    {
      const Vec3 d = q.cwiseAbs() - shape.size;
      const double outside = d.cwiseMax(0.0).norm();
      const double inside = std::min(d.maxCoeff(), 0.0);
      return outside + inside;
    }
    case ShapeKind::Cylinder:
    {
      const double radial = std::hypot(q.x(), q.y()) - shape.size.x();
      const double axial = std::abs(q.z()) - shape.size.y();
      const double outside = std::hypot(std::max(radial, 0.0), std::max(axial, 0.0));
      const double inside = std::min(std::max(radial, axial), 0.0);
      return outside + inside;
    }
  }
  return 0.0;
}

Aabb bounding_box(const AnalyticShape& shape)
{
  Vec3 half;
  switch (shape.kind)
  {
    case ShapeKind::Sphere: half = Vec3::Constant(shape.size.x()); break;
    case ShapeKind::Box: half = shape.size; break;
    case ShapeKind::Cylinder: half = Vec3(shape.size.x(), shape.size.x(), shape.size.y()); break;
  }
  // |R| * half bounds the rotated local box
  const Vec3 extent = shape.pose.R.cwiseAbs() * half;
  return {shape.pose.t - extent, shape.pose.t + extent};
}

SdfGrid::SdfGrid(GridDims dims, Vec3 origin, double spacing, std::vector<float> values, bool clamp_outside)
  : dims_(dims), origin_(origin), spacing_(spacing), values_(std::move(values)), clamp_outside_(clamp_outside)
{
  if (dims_.nx < 2 || dims_.ny < 2 || dims_.nz < 2)
    throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 nodes per axis");
  if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
    throw Error(ErrorKind::InvalidArgument, "grid spacing must be positive");
  if (!all_finite(origin_))
    throw Error(ErrorKind::InvalidArgument, "grid origin must be finite");
  if (values_.size() != dims_.count())
    throw Error(ErrorKind::InvalidArgument, "grid value count does not match dimensions");
  for (float v : values_)
    if (!std::isfinite(v))
      throw Error(ErrorKind::InvalidArgument, "grid values must be finite");
}

Vec3 SdfGrid::domain_max() const
{
  return origin_ + spacing_ * Vec3(dims_.nx - 1, dims_.ny - 1, dims_.nz - 1);
}

bool SdfGrid::contains(const Vec3& p) const
{
  const Vec3 hi = domain_max();
  for (int a = 0; a < 3; ++a)
    if (p[a] < origin_[a] || p[a] > hi[a])
      return false;
  return true;
}

Vec3 SdfGrid::node_position(int ix, int iy, int iz) const
{
  return origin_ + spacing_ * Vec3(ix, iy, iz);
}

SdfGrid::Located SdfGrid::locate(const Vec3& p) const
{
  if (!all_finite(p))
    throw Error(ErrorKind::InvalidArgument, "query point is not finite");
  Located loc{};
  for (int a = 0; a < 3; ++a)
  {
    const int n = dims_[a];
    double s = (p[a] - origin_[a]) / spacing_;
    loc.clamped[a] = false;
    if (s < 0.0 || s > double(n - 1))
    {
      if (!clamp_outside_)
        throw Error(ErrorKind::OutOfDomain, "query point outside grid domain");
      s = std::clamp(s, 0.0, double(n - 1));
      loc.clamped[a] = true;
    }
    // Snap points within rounding noise of a node onto it so node queries are exact.
    const double nearest = std::round(s);
    if (std::abs(s - nearest) < 1e-10)
      s = nearest;
    int i = int(std::floor(s));
    i = std::clamp(i, 0, n - 2);
    loc.cell[a] = i;
    loc.frac[a] = s - double(i);
  }
  return loc;
}

// Reduces the 8 cell corners one axis at a time (x, then y, then z). A differentiated axis
// takes the difference quotient, the others interpolate with std::lerp, which is exact at
// both endpoints and for equal end values.
double SdfGrid::blend(const Located& loc, int dx, int dy, int dz) const
{
  const std::array<int, 3> diff{dx, dy, dz};
  std::array<double, 8> v{};
  for (int corner = 0; corner < 8; ++corner)
    v[std::size_t(corner)] =
        double(node(loc.cell[0] + (corner & 1), loc.cell[1] + ((corner >> 1) & 1), loc.cell[2] + ((corner >> 2) & 1)));

  int count = 8;
  for (int a = 0; a < 3; ++a)
  {
    count /= 2;
    for (int i = 0; i < count; ++i)
    {
      const double lo = v[std::size_t(2 * i)], hi = v[std::size_t(2 * i + 1)];
      v[std::size_t(i)] = diff[a] ? (hi - lo) / spacing_ : std::lerp(lo, hi, loc.frac[a]);
    }
  }
  return v[0];
}

double SdfGrid::query(const Vec3& p) const
{
  return blend(locate(p), 0, 0, 0);
}

Vec3 SdfGrid::gradient(const Vec3& p) const
{
  const Located loc = locate(p);
  Vec3 g(blend(loc, 1, 0, 0), blend(loc, 0, 1, 0), blend(loc, 0, 0, 1));
  for (int a = 0; a < 3; ++a)
    if (loc.clamped[a])
      g[a] = 0.0;
  return g;
}

Mat3 SdfGrid::hessian(const Vec3& p) const
{
  const Located loc = locate(p);
  Mat3 H = Mat3::Zero();
  H(0, 1) = H(1, 0) = blend(loc, 1, 1, 0);
  H(0, 2) = H(2, 0) = blend(loc, 1, 0, 1);
  H(1, 2) = H(2, 1) = blend(loc, 0, 1, 1);
  for (int a = 0; a < 3; ++a)
    if (loc.clamped[a])
    {
      H.row(a).setZero();
      H.col(a).setZero();
    }
  return H;
}

CellIndex SdfGrid::cell_of(const Vec3& p) const
{
  const Located loc = locate(p);
  return {loc.cell, loc.clamped};
}

bool SdfGrid::operator==(const SdfGrid& other) const
{
  return dims_ == other.dims_ && origin_ == other.origin_ && spacing_ == other.spacing_ &&
         values_ == other.values_ && clamp_outside_ == other.clamp_outside_;
}

Aabb object_domain(const AnalyticShape& shape, double min_margin)
{
  const Aabb box = bounding_box(shape);
  const double extent = (box.hi - box.lo).maxCoeff();
  const double margin = std::max(0.25 * extent, min_margin);
  return {box.lo - Vec3::Constant(margin), box.hi + Vec3::Constant(margin)};
}

SdfGrid bake_grid(const std::vector<AnalyticShape>& shapes, const Aabb& domain, int resolution)
{
  if (resolution < 2)
    throw Error(ErrorKind::InvalidArgument, "resolution must be at least 2");
  if (shapes.empty())
    throw Error(ErrorKind::InvalidArgument, "cannot bake an empty shape list");
  const Vec3 extent = domain.hi - domain.lo;
  if (!(extent.minCoeff() > 0.0))
    throw Error(ErrorKind::DomainTooSmall, "domain has non-positive extent");

  const double spacing = extent.maxCoeff() / double(resolution - 1);
  GridDims dims;
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a)
    n[a] = std::max(2, int(std::ceil(extent[a] / spacing - 1e-9)) + 1);
  dims = {n[0], n[1], n[2]};

  for (const auto& shape : shapes)
  {
    shape.validate();
    const Aabb b = bounding_box(shape);
    const Vec3 pad = Vec3::Constant(2.0 * spacing);
    const Vec3 lo = b.lo - pad;
    const Vec3 hi = b.hi + pad;
    for (int a = 0; a < 3; ++a)
      if (!(lo[a] > domain.lo[a] && hi[a] < domain.hi[a]))
        throw Error(ErrorKind::DomainTooSmall, "domain must contain every shape with two cells of padding");
  }

  std::vector<float> values(dims.count());
  std::size_t idx = 0;
  for (int iz = 0; iz < dims.nz; ++iz)
    for (int iy = 0; iy < dims.ny; ++iy)
      for (int ix = 0; ix < dims.nx; ++ix, ++idx)
      {
        const Vec3 p = domain.lo + spacing * Vec3(ix, iy, iz);
        double d = analytic_sdf(shapes.front(), p);
        for (std::size_t s = 1; s < shapes.size(); ++s)
          d = std::min(d, analytic_sdf(shapes[s], p));
        values[idx] = float(d);
      }
  return SdfGrid(dims, domain.lo, spacing, std::move(values));
}

namespace
{

constexpr char kMagic[4] = {'S', 'D', 'F', '1'};

static_assert(std::endian::native == std::endian::little, "grid I/O assumes a little-endian host");

template <typename T>
void write_le(std::ofstream& out, T value)
{
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in, const char* what)
{
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw Error(ErrorKind::Format, std::string("truncated grid header (") + what + ")");
  return value;
}

}  // namespace

void save_grid(const SdfGrid& grid, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, std::uint32_t(grid.dims().nx));
  write_le<std::uint32_t>(out, std::uint32_t(grid.dims().ny));
  write_le<std::uint32_t>(out, std::uint32_t(grid.dims().nz));
  for (int a = 0; a < 3; ++a)
    write_le<double>(out, grid.origin()[a]);
  write_le<double>(out, grid.spacing());
  out.write(reinterpret_cast<const char*>(grid.values().data()),
            std::streamsize(grid.values().size() * sizeof(float)));
  if (!out)
    throw Error(ErrorKind::Io, "write failed for " + path.string());
}

SdfGrid load_grid(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorKind::Format, "bad magic in " + path.string());
  GridDims dims;
  dims.nx = int(read_le<std::uint32_t>(in, "nx"));
  dims.ny = int(read_le<std::uint32_t>(in, "ny"));
  dims.nz = int(read_le<std::uint32_t>(in, "nz"));
  Vec3 origin;
  for (int a = 0; a < 3; ++a)
    origin[a] = read_le<double>(in, "origin");
  const double spacing = read_le<double>(in, "spacing");
  if (dims.nx < 2 || dims.ny < 2 || dims.nz < 2)
    throw Error(ErrorKind::Format, "grid dimensions must be >= 2");

  std::vector<float> values(dims.count());
  const auto bytes = std::streamsize(values.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(values.data()), bytes);
  if (in.gcount() != bytes)
    throw Error(ErrorKind::Format, "length mismatch: raster shorter than nx*ny*nz");
  if (in.peek() != std::ifstream::traits_type::eof())
    throw Error(ErrorKind::Format, "length mismatch: trailing bytes after raster");
  try
  {
    return SdfGrid(dims, origin, spacing, std::move(values));
  }
  catch (const Error& e)
  {
    throw Error(ErrorKind::Format, e.what());
  }
}

}  // namespace graspprior
