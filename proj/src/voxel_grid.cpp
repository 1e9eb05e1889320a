#include "invpose/voxel_grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace invpose {

namespace {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("voxel grid: truncated stream");
  return v;
}

}  // namespace

VoxelGrid::VoxelGrid(std::array<std::uint32_t, 3> dims, const Vec3& bounds_min,
                     const Vec3& bounds_max)
    : dims_(dims), bounds_min_(bounds_min), bounds_max_(bounds_max) {
  for (int k = 0; k < 3; ++k) {
    if (dims_[static_cast<std::size_t>(k)] < 2)
      throw std::invalid_argument("voxel grid: each dim must be >= 2");
    if (!(bounds_max_[k] > bounds_min_[k]))
      throw std::invalid_argument("voxel grid: zero extent bounds");
  }
  cells_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
}

VoxelCell& VoxelGrid::at(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) {
  return cells_[(static_cast<std::size_t>(iz) * dims_[1] + iy) * dims_[0] + ix];
}

const VoxelCell& VoxelGrid::at(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
  return cells_[(static_cast<std::size_t>(iz) * dims_[1] + iy) * dims_[0] + ix];
}

void VoxelGrid::write(std::ostream& os) const {
  for (std::uint32_t d : dims_) write_raw(os, d);
  for (int k = 0; k < 3; ++k) write_raw(os, bounds_min_[k]);
  for (int k = 0; k < 3; ++k) write_raw(os, bounds_max_[k]);
  for (const VoxelCell& c : cells_) {
    write_raw(os, c.sigma);
    write_raw(os, c.r);
    write_raw(os, c.g);
    write_raw(os, c.b);
  }
}

VoxelGrid VoxelGrid::read(std::istream& is) {
  std::array<std::uint32_t, 3> dims{};
  for (auto& d : dims) d = read_raw<std::uint32_t>(is);
  Vec3 lo, hi;
  for (int k = 0; k < 3; ++k) lo[k] = read_raw<double>(is);
  for (int k = 0; k < 3; ++k) hi[k] = read_raw<double>(is);
  VoxelGrid grid(dims, lo, hi);
  for (VoxelCell& c : grid.cells_) {
    c.sigma = read_raw<float>(is);
    c.r = read_raw<float>(is);
    c.g = read_raw<float>(is);
    c.b = read_raw<float>(is);
  }
  return grid;
}

void VoxelGrid::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write(os);
}

VoxelGrid VoxelGrid::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read(is);
}

VoxelField::VoxelField(VoxelGrid grid, const Vec3& background)
    : grid_(std::move(grid)), background_(background) {}

FieldSample VoxelField::sample(const Vec3& x) const {
  FieldSample out;
  out.color = background_;
  if (!x.allFinite()) throw std::invalid_argument("non-finite query point");

  const Vec3& lo = grid_.bounds_min();
  const Vec3& hi = grid_.bounds_max();
  for (int k = 0; k < 3; ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return out;
  }

  const auto& dims = grid_.dims();
  Vec3 spacing, frac;
  std::uint32_t cell[3];
  for (int k = 0; k < 3; ++k) {
    const auto n = dims[static_cast<std::size_t>(k)];
    spacing[k] = (hi[k] - lo[k]) / static_cast<double>(n - 1);
    const double u = (x[k] - lo[k]) / spacing[k];
    const double c = std::clamp(std::floor(u), 0.0, static_cast<double>(n - 2));
    cell[k] = static_cast<std::uint32_t>(c);
    frac[k] = u - c;
  }

  // Accumulate the 8-corner interpolant for (sigma, r, g, b) along with the
  // exact derivative of the trilinear form.
  double val[4] = {0, 0, 0, 0};
  double dval[4][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (int a = 0; a < 2; ++a) {
    const double wx = a ? frac.x() : 1.0 - frac.x();
    const double dwx = a ? 1.0 : -1.0;
    for (int b = 0; b < 2; ++b) {
      const double wy = b ? frac.y() : 1.0 - frac.y();
      const double dwy = b ? 1.0 : -1.0;
      for (int c = 0; c < 2; ++c) {
        const double wz = c ? frac.z() : 1.0 - frac.z();
        const double dwz = c ? 1.0 : -1.0;
        const VoxelCell& v = grid_.at(cell[0] + static_cast<std::uint32_t>(a),
                                      cell[1] + static_cast<std::uint32_t>(b),
                                      cell[2] + static_cast<std::uint32_t>(c));
        const double ch[4] = {v.sigma, v.r, v.g, v.b};
        for (int m = 0; m < 4; ++m) {
          val[m] += wx * wy * wz * ch[m];
          dval[m][0] += dwx * wy * wz * ch[m] / spacing.x();
          dval[m][1] += wx * dwy * wz * ch[m] / spacing.y();
          dval[m][2] += wx * wy * dwz * ch[m] / spacing.z();
        }
      }
    }
  }

  out.sigma = std::max(0.0, val[0]);
  out.color = Vec3(val[1], val[2], val[3]);
  out.d_sigma_dx = val[0] >= 0.0 ? Vec3(dval[0][0], dval[0][1], dval[0][2]) : Vec3::Zero();
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k) out.d_color_dx(m, k) = dval[m + 1][k];
  return out;
}

}  // namespace invpose
