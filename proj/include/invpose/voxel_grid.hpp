// Trilinear voxel-grid radiance field, for localizing against baked
// density/color grids.
//
// Binary file layout (little-endian):
//   3 x u32   dims nx, ny, nz (each >= 2)
//   6 x f64   bounds x_min, y_min, z_min, x_max, y_max, z_max (meters)
//   then nx*ny*nz records of 4 x f32 (sigma, r, g, b), x fastest:
//   record index = (iz * ny + iy) * nx + ix.

#ifndef INVPOSE_VOXEL_GRID_HPP
#define INVPOSE_VOXEL_GRID_HPP

#include "invpose/scene_field.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace invpose {

struct VoxelCell {
  float sigma = 0.0f;
  float r = 0.0f, g = 0.0f, b = 0.0f;
};

class VoxelGrid {
 public:
  /// Throws std::invalid_argument on dims < 2 or empty bounds extent.
  VoxelGrid(std::array<std::uint32_t, 3> dims, const Vec3& bounds_min, const Vec3& bounds_max);

  VoxelCell& at(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz);
  const VoxelCell& at(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const;

  const std::array<std::uint32_t, 3>& dims() const { return dims_; }
  const Vec3& bounds_min() const { return bounds_min_; }
  const Vec3& bounds_max() const { return bounds_max_; }

  void write(std::ostream& os) const;
  static VoxelGrid read(std::istream& is);

  void save(const std::string& path) const;
  static VoxelGrid load(const std::string& path);

 private:
  std::array<std::uint32_t, 3> dims_;
  Vec3 bounds_min_, bounds_max_;
  std::vector<VoxelCell> cells_;
};

/// Field view over a grid. Outside the bounds sigma is 0 with background
/// color and zero gradients; inside, values and gradients are the exact
/// trilinear interpolant and its derivative.
class VoxelField final : public RadianceField {
 public:
  explicit VoxelField(VoxelGrid grid, const Vec3& background = Vec3::Zero());

  FieldSample sample(const Vec3& x) const override;
  Vec3 background() const override { return background_; }
  const VoxelGrid& grid() const { return grid_; }

 private:
  VoxelGrid grid_;
  Vec3 background_;
};

}  // namespace invpose

#endif  // INVPOSE_VOXEL_GRID_HPP
