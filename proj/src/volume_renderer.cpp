#include "invpose/volume_renderer.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace invpose {

namespace {

constexpr double kOpacityFloor = 1e-6;
constexpr double kWideMinNear = 1e-3;

void check_sorted(const std::vector<RaySample>& samples) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t < samples[i - 1].t)
      throw std::invalid_argument("unsorted ray samples");
  }
}

struct Interval {
  double lo, hi;
};

Interval sampling_interval(double near, double far, bool wide) {
  if (!(near < far)) throw std::invalid_argument("near must be < far");
  if (!wide) return {near, far};
  const double mid = 0.5 * (near + far);
  const double len = far - near;  // doubled interval keeps the midpoint
  return {std::max(mid - len, kWideMinNear), mid + len};
}

template <typename UniformFn>
void fill_stratified(double near, double far, int n_samples, bool wide, UniformFn&& u01,
                     std::vector<RaySample>& out) {
  if (n_samples < 2) throw std::invalid_argument("n_samples must be >= 2");
  const Interval iv = sampling_interval(near, far, wide);
  const double dt = (iv.hi - iv.lo) / static_cast<double>(n_samples);
  out.resize(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    out[static_cast<std::size_t>(i)] = {iv.lo + (static_cast<double>(i) + u01()) * dt, dt};
  }
}

}  // namespace

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be > 0");
  if (width < 1 || height < 1) throw std::invalid_argument("camera: empty image");
  if (!(0.0 < near && near < far)) throw std::invalid_argument("camera: need 0 < near < far");
}

Vec3 pixel_direction(const Camera& camera, int u, int v) {
  const Vec3 d((static_cast<double>(u) + 0.5 - camera.cx) / camera.fx,
               (static_cast<double>(v) + 0.5 - camera.cy) / camera.fy, 1.0);
  return d.normalized();
}

std::vector<Ray> generate_rays(const Camera& camera, const Pose& pose,
                               const std::vector<std::pair<int, int>>& pixels) {
  camera.validate();
  std::vector<Ray> rays;
  rays.reserve(pixels.size());
  for (const auto& [u, v] : pixels) {
    if (u < 0 || u >= camera.width || v < 0 || v >= camera.height)
      throw std::out_of_range("pixel outside image bounds");
    Ray r;
    r.origin = pose.translation;
    r.direction = pose.rotation * pixel_direction(camera, u, v);
    r.u = u;
    r.v = v;
    rays.push_back(r);
  }
  return rays;
}

void sample_stratified(double near, double far, int n_samples, bool wide, Rng& rng,
                       std::vector<RaySample>& out) {
  fill_stratified(near, far, n_samples, wide, [&rng] { return rng.uniform01(); }, out);
}

std::vector<RaySample> sample_stratified(double near, double far, int n_samples, bool wide,
                                         Rng& rng) {
  std::vector<RaySample> out;
  sample_stratified(near, far, n_samples, wide, rng, out);
  return out;
}

void sample_midpoint(double near, double far, int n_samples, bool wide,
                     std::vector<RaySample>& out) {
  fill_stratified(near, far, n_samples, wide, [] { return 0.5; }, out);
}

RayRadiance render_ray(const RadianceField& field, const Ray& ray,
                       const std::vector<RaySample>& samples, const Vec3& background,
                       std::vector<double>* weights) {
  check_sorted(samples);
  if (weights) {
    weights->clear();
    weights->reserve(samples.size());
  }

  RayRadiance out;
  double transmittance = 1.0;
  double depth_sum = 0.0;
  for (const RaySample& s : samples) {
    const FieldSample f = field.sample(ray.origin + s.t * ray.direction);
    const double alpha = 1.0 - std::exp(-f.sigma * s.dt);
    const double w = transmittance * alpha;
    out.color += w * f.color;
    depth_sum += w * s.t;
    transmittance *= 1.0 - alpha;
    if (weights) weights->push_back(w);
  }
  out.opacity = 1.0 - transmittance;
  out.color += transmittance * background;
  out.depth = depth_sum / std::max(out.opacity, kOpacityFloor);
  return out;
}

ShadedRay render_ray_local_grad(const RadianceField& field, const Pose& pose,
                                const Vec3& local_dir, const std::vector<RaySample>& samples,
                                const Vec3& background, RenderWorkspace& ws) {
  check_sorted(samples);
  const std::size_t n = samples.size();
  ws.fs.resize(n);
  ws.alpha.resize(n);
  ws.trans.resize(n);

  ShadedRay out;
  double transmittance = 1.0;
  double depth_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = samples[i].t * local_dir;
    const FieldSample f = field.sample(pose * p);
    const double alpha = 1.0 - std::exp(-f.sigma * samples[i].dt);
    ws.fs[i] = f;
    ws.alpha[i] = alpha;
    ws.trans[i] = transmittance;
    const double w = transmittance * alpha;
    out.radiance.color += w * f.color;
    depth_sum += w * samples[i].t;
    transmittance *= 1.0 - alpha;
  }
  const double t_final = transmittance;
  out.radiance.opacity = 1.0 - t_final;
  out.radiance.color += t_final * background;
  const double op_clamped = std::max(out.radiance.opacity, kOpacityFloor);
  out.radiance.depth = depth_sum / op_clamped;
  const double op_mask = out.radiance.opacity > kOpacityFloor ? 1.0 : 0.0;

  // Backward sweep. Suffix sums carry the downstream dependence of the
  // transmittance on each sample's density.
  const Mat3 rot_t = pose.rotation.transpose();
  Vec3 suffix_color = t_final * background;
  double suffix_depth = 0.0;
  for (std::size_t idx = n; idx-- > 0;) {
    const RaySample& s = samples[idx];
    const FieldSample& f = ws.fs[idx];
    const double w = ws.trans[idx] * ws.alpha[idx];
    const double gain = ws.trans[idx] * s.dt * (1.0 - ws.alpha[idx]);  // d w_i / d sigma_i

    const Vec3 d_color_d_sigma = gain * f.color - s.dt * suffix_color;
    const double d_dsum_d_sigma = gain * s.t - s.dt * suffix_depth;
    const double d_op_d_sigma = s.dt * t_final;
    const double d_depth_d_sigma =
        (d_dsum_d_sigma * op_clamped - depth_sum * op_mask * d_op_d_sigma) /
        (op_clamped * op_clamped);

    const Vec3 p = s.t * local_dir;
    for (int m = 0; m < 3; ++m) {
      const Vec3 spatial =
          d_color_d_sigma[m] * f.d_sigma_dx + w * f.d_color_dx.row(m).transpose();
      const Vec3 q = rot_t * spatial;
      out.d_color_local.row(m).head<3>() += q.transpose();
      out.d_color_local.row(m).tail<3>() += p.cross(q).transpose();
    }
    const Vec3 q_depth = rot_t * (d_depth_d_sigma * f.d_sigma_dx);
    out.d_depth_local.head<3>() += q_depth;
    out.d_depth_local.tail<3>() += p.cross(q_depth);
    const Vec3 q_op = rot_t * (d_op_d_sigma * f.d_sigma_dx);
    out.d_opacity_local.head<3>() += q_op;
    out.d_opacity_local.tail<3>() += p.cross(q_op);

    suffix_color += w * f.color;
    suffix_depth += w * s.t;
  }
  return out;
}

std::pair<RayRadiance, RayPoseGrad> render_ray_with_pose_grad(
    const RadianceField& field, const Camera& camera, const Pose& pose_base,
    const Tangent& delta, int u, int v, const std::vector<RaySample>& samples,
    RenderWorkspace& ws) {
  if (u < 0 || u >= camera.width || v < 0 || v >= camera.height)
    throw std::out_of_range("pixel outside image bounds");

  const Pose pose = compose(pose_base, se3_exp(delta));
  const Vec3 local_dir = pixel_direction(camera, u, v);
  const ShadedRay shaded =
      render_ray_local_grad(field, pose, local_dir, samples, field.background(), ws);

  const Mat6 jr = se3_right_jacobian(delta);
  RayPoseGrad grad;
  grad.d_color = shaded.d_color_local * jr;
  grad.d_depth = jr.transpose() * shaded.d_depth_local;
  grad.d_opacity = jr.transpose() * shaded.d_opacity_local;
  return {shaded.radiance, grad};
}

}  // namespace invpose
