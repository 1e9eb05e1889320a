#include "invpose/objective.hpp"

#include "invpose/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace invpose {

Huber huber(double residual, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("huber threshold must be > 0");
  const double a = std::abs(residual);
  if (a <= threshold) return Huber{0.5 * residual * residual, residual};
  return Huber{threshold * (a - 0.5 * threshold), residual > 0.0 ? threshold : -threshold};
}

std::vector<PixelRef> sample_pixels(std::span<const RgbdFrame> frames, int total_rays,
                                    Rng& rng) {
  if (frames.empty() || total_rays < 1) throw std::invalid_argument("no rays to sample");

  const int n_frames = static_cast<int>(frames.size());
  const int base = total_rays / n_frames;
  const int remainder = total_rays % n_frames;

  std::vector<PixelRef> pixels;
  pixels.reserve(static_cast<std::size_t>(total_rays));
  for (int f = 0; f < n_frames; ++f) {
    const int count = base + (f < remainder ? 1 : 0);
    const auto w = static_cast<std::uint32_t>(frames[static_cast<std::size_t>(f)].camera.width);
    const auto h = static_cast<std::uint32_t>(frames[static_cast<std::size_t>(f)].camera.height);
    for (int i = 0; i < count; ++i) {
      PixelRef p;
      p.frame = f;
      p.u = static_cast<int>(rng.below(w));
      p.v = static_cast<int>(rng.below(h));
      pixels.push_back(p);
    }
  }
  return pixels;
}

namespace {

struct RayContribution {
  double rgb_loss = 0.0;  // sum of the 3 channel Huber values
  Vec6 rgb_grad = Vec6::Zero();
  bool has_depth = false;
  double depth_loss = 0.0;
  Vec6 depth_grad = Vec6::Zero();
};

}  // namespace

LossReport evaluate(const RadianceField& field, std::span<const RgbdFrame> frames,
                    const Pose& pose_base, const Tangent& delta, const ObjectiveConfig& config,
                    std::uint64_t seed) {
  Rng pixel_rng(derive_seed(seed, {0}));
  const std::vector<PixelRef> pixels = sample_pixels(frames, config.rays_per_step, pixel_rng);
  const int n_rays = static_cast<int>(pixels.size());

  const Pose pose_all = compose(pose_base, se3_exp(delta));
  const Mat6 jr = se3_right_jacobian(delta);

  // Per-frame render pose and map from the camera-local tangent frame to
  // d/d delta: pose_i(delta) = pose_i * exp(Ad(C_i^-1) J_r(delta) d_delta).
  std::vector<Pose> frame_pose(frames.size());
  std::vector<Mat6> tangent_map(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frame_pose[f] = compose(pose_all, frames[f].rel_pose);
    tangent_map[f] = adjoint(inverse(frames[f].rel_pose)) * jr;
  }

  std::vector<RayContribution> contributions(static_cast<std::size_t>(n_rays));
  parallel_for(n_rays, config.n_threads, [&](int i) {
    thread_local RenderWorkspace ws;
    thread_local std::vector<RaySample> samples;

    const PixelRef& px = pixels[static_cast<std::size_t>(i)];
    const RgbdFrame& frame = frames[static_cast<std::size_t>(px.frame)];
    Rng ray_rng(derive_seed(seed, {1, static_cast<std::uint64_t>(i)}));
    sample_stratified(frame.camera.near, frame.camera.far, config.samples_per_ray, config.wide,
                      ray_rng, samples);

    const Vec3 local_dir = pixel_direction(frame.camera, px.u, px.v);
    const ShadedRay shaded =
        render_ray_local_grad(field, frame_pose[static_cast<std::size_t>(px.frame)], local_dir,
                              samples, field.background(), ws);

    RayContribution& out = contributions[static_cast<std::size_t>(i)];
    const Vec3& ref = frame.color_at(px.u, px.v);
    for (int m = 0; m < 3; ++m) {
      const Huber h = huber(shaded.radiance.color[m] - ref[m], config.huber_color);
      out.rgb_loss += h.value;
      out.rgb_grad += h.derivative * shaded.d_color_local.row(m).transpose();
    }
    if (frame.valid_at(px.u, px.v)) {
      // Soft opacity mask. A fully rendered ray carries the plain depth
      // residual; a transparent one pays a fixed miss penalty, with a
      // linear fade in opacity between the two. A hard mask lets the
      // optimizer zero the depth term by steering every ray off the scene.
      const Huber h =
          huber(shaded.radiance.depth - frame.depth_at(px.u, px.v), config.huber_depth);
      const double miss = huber(config.depth_miss_residual, config.huber_depth).value;
      const double trust = std::min(shaded.radiance.opacity / config.depth_mask_fade, 1.0);
      out.has_depth = true;
      out.depth_loss = trust * h.value + (1.0 - trust) * miss;
      out.depth_grad = trust * h.derivative * shaded.d_depth_local;
      if (shaded.radiance.opacity < config.depth_mask_fade) {
        out.depth_grad += ((h.value - miss) / config.depth_mask_fade) * shaded.d_opacity_local;
      }
    }
  });

  // Sequential reduction in ray order keeps results identical across thread
  // counts. Gradients are pooled per frame so the tangent map is applied once.
  LossReport report;
  report.n_rays = n_rays;
  std::vector<Vec6> frame_rgb_grad(frames.size(), Vec6::Zero());
  std::vector<Vec6> frame_depth_grad(frames.size(), Vec6::Zero());
  double rgb_sum = 0.0, depth_sum = 0.0;
  int depth_count = 0;
  for (int i = 0; i < n_rays; ++i) {
    const RayContribution& c = contributions[static_cast<std::size_t>(i)];
    const auto f = static_cast<std::size_t>(pixels[static_cast<std::size_t>(i)].frame);
    rgb_sum += c.rgb_loss;
    frame_rgb_grad[f] += c.rgb_grad;
    if (c.has_depth) {
      depth_sum += c.depth_loss;
      frame_depth_grad[f] += c.depth_grad;
      ++depth_count;
    }
  }

  const double rgb_scale = 1.0 / (3.0 * static_cast<double>(n_rays));
  report.rgb_term = rgb_sum * rgb_scale;
  report.n_depth_rays = depth_count;
  if (depth_count > 0) {
    report.depth_term = depth_sum / static_cast<double>(depth_count);
  } else if (config.lambda_depth > 0.0) {
    report.depth_warning = true;
  }
  report.total = report.rgb_term + config.lambda_depth * report.depth_term;

  for (std::size_t f = 0; f < frames.size(); ++f) {
    Vec6 local = rgb_scale * frame_rgb_grad[f];
    if (depth_count > 0) {
      local += (config.lambda_depth / static_cast<double>(depth_count)) * frame_depth_grad[f];
    }
    report.grad += tangent_map[f].transpose() * local;
  }
  return report;
}

}  // namespace invpose
