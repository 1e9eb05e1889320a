// Pose-estimation loss: robust photometric term plus a depth term over
// pixels sampled from a window of RGB-D frames, with the exact gradient
// with respect to the pose tangent.
//
// Frame i is rendered at world pose (pose_base * exp(delta)) * rel_pose_i,
// where rel_pose is the frame's transform relative to the window's last
// frame (identity for the last frame itself).

#ifndef INVPOSE_OBJECTIVE_HPP
#define INVPOSE_OBJECTIVE_HPP

#include "invpose/lie_se3.hpp"
#include "invpose/scene_field.hpp"
#include "invpose/volume_renderer.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace invpose {

/// Reference image with per-pixel color, metric depth and a validity mask.
struct RgbdFrame {
  Camera camera;
  Pose rel_pose;                    ///< this frame relative to the window's last frame
  std::optional<Pose> world_pose;   ///< absolute pose when known (bookkeeping)
  std::vector<Vec3> color;          ///< row-major H*W, RGB in [0, 1]
  std::vector<double> depth;        ///< row-major H*W, m
  std::vector<std::uint8_t> depth_valid;

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(camera.width) +
           static_cast<std::size_t>(u);
  }
  const Vec3& color_at(int u, int v) const { return color[index(u, v)]; }
  double depth_at(int u, int v) const { return depth[index(u, v)]; }
  bool valid_at(int u, int v) const { return depth_valid[index(u, v)] != 0; }
};

/// Opacity threshold of the depth mask. At or above it a valid-depth ray
/// carries the plain depth residual; below it the residual fades linearly
/// (in opacity) into a capped miss penalty so that de-rendering the scene
/// never pays off.
inline constexpr double kDepthOpacityMask = 0.05;

struct Huber {
  double value;
  double derivative;
};

/// value = r^2/2 for |r| <= threshold, threshold*(|r| - threshold/2) beyond;
/// the derivative is continuous across the knee. threshold > 0.
Huber huber(double residual, double threshold);

struct PixelRef {
  int frame = 0;
  int u = 0, v = 0;
};

/// Splits total_rays as evenly as possible across frames (remainder to the
/// earliest frames) and draws pixel positions uniformly per image.
std::vector<PixelRef> sample_pixels(std::span<const RgbdFrame> frames, int total_rays,
                                    Rng& rng);

struct ObjectiveConfig {
  double lambda_depth = 0.5;
  double huber_color = 0.1;
  double huber_depth = 0.1;  ///< m
  int rays_per_step = 2048;
  int samples_per_ray = 128;
  bool wide = false;
  /// Opacity span of the depth-mask fade: a valid-depth ray's residual is
  /// trusted in proportion to min(opacity / fade, 1).
  double depth_mask_fade = 0.5;
  /// Surrogate residual (m) charged to a valid-depth ray the render leaves
  /// transparent; keeps "see nothing" from paying off.
  double depth_miss_residual = 1.0;
  int n_threads = 1;
};

struct LossReport {
  double total = 0.0;      ///< rgb_term + lambda_depth * depth_term, exactly
  double rgb_term = 0.0;   ///< mean Huber over rays and channels
  double depth_term = 0.0; ///< mean soft-masked Huber over valid-depth rays
  int n_rays = 0;
  int n_depth_rays = 0;    ///< rays with valid sensor depth
  bool depth_warning = false;  ///< lambda_depth > 0 but no ray had valid depth
  Vec6 grad = Vec6::Zero();    ///< d total / d delta
};

/// Renders freshly sampled pixels and accumulates the loss and its exact
/// gradient. Deterministic for a given seed; throws std::invalid_argument
/// when no rays can be sampled.
LossReport evaluate(const RadianceField& field, std::span<const RgbdFrame> frames,
                    const Pose& pose_base, const Tangent& delta, const ObjectiveConfig& config,
                    std::uint64_t seed);

}  // namespace invpose

#endif  // INVPOSE_OBJECTIVE_HPP
