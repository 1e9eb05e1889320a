// Differentiable radiance fields. A field maps a world position to a
// volumetric density sigma, an emitted RGB color and their exact spatial
// derivatives. Three implementations live here / in voxel_grid.hpp:
//
//   SceneField   - analytic soft-edged primitives (spheres, boxes)
//   VoxelField   - trilinear interpolation of a baked density/color grid
//   LowpassField - Gaussian smoothing wrapper around any base field
//
// Fields are immutable after construction and safe to sample concurrently.

#ifndef INVPOSE_SCENE_FIELD_HPP
#define INVPOSE_SCENE_FIELD_HPP

#include "invpose/lie_se3.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace invpose {

/// One field query result. Gradients are exact derivatives of the field
/// formulas: d_sigma_dx(j) = d sigma / d x_j, d_color_dx(i, j) = d c_i / d x_j.
struct FieldSample {
  double sigma = 0.0;            ///< density, 1/m, >= 0
  Vec3 color = Vec3::Zero();     ///< RGB in [0, 1]
  Vec3 d_sigma_dx = Vec3::Zero();
  Mat3 d_color_dx = Mat3::Zero();
};

class RadianceField {
 public:
  virtual ~RadianceField() = default;
  virtual FieldSample sample(const Vec3& x) const = 0;
  virtual Vec3 background() const { return Vec3::Zero(); }
};

struct Primitive {
  enum class Shape { Sphere, Box };
  Shape shape = Shape::Sphere;
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Constant(0.5);  ///< sphere: radius in x (y,z ignored); box: half extents
  double sigma_max = 50.0;          ///< density deep inside the primitive, 1/m
  double edge_softness = 0.05;      ///< half width of the soft boundary shell, m
  Vec3 color = Vec3::Ones();
};

/// Scene description: soft primitives inside the 2x2x2 m canonical cube.
struct SceneSpec {
  std::vector<Primitive> primitives;
  Vec3 background_color = Vec3::Zero();
  std::string name;

  /// Throws std::invalid_argument when a primitive leaves the canonical
  /// cube or edge_softness is not positive.
  void validate() const;
};

/// Signed distance to a primitive surface and its spatial gradient.
double primitive_signed_distance(const Primitive& prim, const Vec3& x, Vec3* grad);

/// Analytic field: sigma = sum_p sigma_max_p * occupancy(sdf_p / softness),
/// color = density-weighted blend of primitive colors (background where the
/// total density vanishes).
class SceneField final : public RadianceField {
 public:
  explicit SceneField(SceneSpec spec);

  FieldSample sample(const Vec3& x) const override;
  Vec3 background() const override { return spec_.background_color; }
  const SceneSpec& spec() const { return spec_; }

 private:
  SceneSpec spec_;
};

/// Gaussian low-pass wrapper: averages the base field over n_taps fixed
/// offsets drawn quasi-randomly from an isotropic Gaussian of width
/// kernel_sigma. Offset taps come in antithetic pairs so constant and
/// linear fields pass through unchanged. kernel_sigma == 0 reproduces the
/// base field exactly. The base field must outlive the wrapper.
class LowpassField final : public RadianceField {
 public:
  LowpassField(const RadianceField& base, double kernel_sigma, int n_taps, std::uint64_t seed);

  FieldSample sample(const Vec3& x) const override;
  Vec3 background() const override { return base_.background(); }

  /// Tap offsets in meters; empty when kernel_sigma == 0 (passthrough).
  const std::vector<Vec3>& offsets() const { return offsets_; }

 private:
  const RadianceField& base_;
  std::vector<Vec3> offsets_;
};

}  // namespace invpose

#endif  // INVPOSE_SCENE_FIELD_HPP
