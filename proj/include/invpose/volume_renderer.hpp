// Pinhole ray generation, stratified sampling along rays and
// emission-absorption integration of color and expected depth, together
// with the exact derivative of every rendered quantity with respect to a
// 6-DoF pose tangent.
//
// Camera convention: local +z forward, +x right, +y down.
// Per-sample weights w_i = T_i * (1 - exp(-sigma_i dt_i)) telescope so that
// sum(w) + final transmittance == 1 up to rounding.

#ifndef INVPOSE_VOLUME_RENDERER_HPP
#define INVPOSE_VOLUME_RENDERER_HPP

#include "invpose/lie_se3.hpp"
#include "invpose/rng.hpp"
#include "invpose/scene_field.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace invpose {

struct Camera {
  double fx = 110.0, fy = 110.0;  ///< focal lengths, px
  double cx = 64.0, cy = 64.0;    ///< principal point, px
  int width = 128, height = 128;
  double near = 2.0, far = 6.0;  ///< sampling interval along rays, m

  void validate() const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();     ///< world, m
  Vec3 direction = Vec3::UnitZ();  ///< world, unit length
  int u = 0, v = 0;               ///< source pixel
};

/// One quadrature node along a ray: distance t and bin width dt (meters).
struct RaySample {
  double t = 0.0;
  double dt = 0.0;
};

struct RayRadiance {
  Vec3 color = Vec3::Zero();
  double depth = 0.0;    ///< opacity-normalized expected depth, m
  double opacity = 0.0;  ///< 1 - final transmittance, in [0, 1]
};

/// Pose derivatives of one rendered ray, tangent ordering [rho, phi].
struct RayPoseGrad {
  Mat36 d_color = Mat36::Zero();   ///< d color / d delta
  Vec6 d_depth = Vec6::Zero();     ///< d depth / d delta
  Vec6 d_opacity = Vec6::Zero();   ///< d opacity / d delta
};

/// Camera-local unit direction through the center of pixel (u, v).
Vec3 pixel_direction(const Camera& camera, int u, int v);

/// World rays for the given pixels. Throws std::out_of_range on a pixel
/// outside the image.
std::vector<Ray> generate_rays(const Camera& camera, const Pose& pose,
                               const std::vector<std::pair<int, int>>& pixels);

/// Stratified samples over [near, far], or over the widened interval with
/// the same midpoint and twice the length (clipped below at 1e-3 m).
/// One uniform draw per equal-width bin; dt = bin width. n_samples >= 2.
void sample_stratified(double near, double far, int n_samples, bool wide, Rng& rng,
                       std::vector<RaySample>& out);
std::vector<RaySample> sample_stratified(double near, double far, int n_samples, bool wide,
                                         Rng& rng);

/// Deterministic variant placing each sample at its bin midpoint.
void sample_midpoint(double near, double far, int n_samples, bool wide,
                     std::vector<RaySample>& out);

/// Emission-absorption integration of one ray. Samples must be sorted
/// ascending in t (throws std::invalid_argument otherwise). When `weights`
/// is non-null it receives the per-sample compositing weights.
RayRadiance render_ray(const RadianceField& field, const Ray& ray,
                       const std::vector<RaySample>& samples, const Vec3& background,
                       std::vector<double>* weights = nullptr);

/// Scratch buffers reused across rays by the gradient renderer.
struct RenderWorkspace {
  std::vector<FieldSample> fs;
  std::vector<double> alpha;
  std::vector<double> trans;
};

/// Radiance plus derivatives taken in the local tangent frame of `pose`:
/// for pose' = pose * exp(eps), rows are d(out)/d(eps) at eps = 0.
struct ShadedRay {
  RayRadiance radiance;
  Mat36 d_color_local = Mat36::Zero();
  Vec6 d_depth_local = Vec6::Zero();
  Vec6 d_opacity_local = Vec6::Zero();
};

/// Core gradient renderer. `local_dir` is the unit ray direction in the
/// camera frame of `pose`; sample positions are pose * (t_i * local_dir).
ShadedRay render_ray_local_grad(const RadianceField& field, const Pose& pose,
                                const Vec3& local_dir, const std::vector<RaySample>& samples,
                                const Vec3& background, RenderWorkspace& ws);

/// Spec-level entry point: renders pixel (u, v) at pose_base * exp(delta)
/// and returns derivatives with respect to delta (chain through the SE(3)
/// right Jacobian; stratified t values held fixed).
std::pair<RayRadiance, RayPoseGrad> render_ray_with_pose_grad(
    const RadianceField& field, const Camera& camera, const Pose& pose_base,
    const Tangent& delta, int u, int v, const std::vector<RaySample>& samples,
    RenderWorkspace& ws);

}  // namespace invpose

#endif  // INVPOSE_VOLUME_RENDERER_HPP
