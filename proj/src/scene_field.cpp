#include "invpose/scene_field.hpp"

#include "invpose/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace invpose {

namespace {

// Cubic occupancy profile over the signed distance d: 1 deep inside the
// surface, 0 outside, C1 across both ends of the shell |d| <= softness.
struct Occupancy {
  double value;
  double d_value_dd;
};

Occupancy occupancy(double signed_distance, double softness) {
  const double w = std::clamp((softness - signed_distance) / (2.0 * softness), 0.0, 1.0);
  return Occupancy{w * w * (3.0 - 2.0 * w), 6.0 * w * (1.0 - w) * (-0.5 / softness)};
}

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9).
double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double q, r;
  if (p < p_low) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  for (std::uint64_t i = index; i > 0; i /= base) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
  }
  return r;
}

}  // namespace

void SceneSpec::validate() const {
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const Primitive& p = primitives[i];
    const std::string tag = "primitive " + std::to_string(i);
    if (!(p.edge_softness > 0.0))
      throw std::invalid_argument(tag + ": edge_softness must be > 0");
    if (p.sigma_max < 0.0)
      throw std::invalid_argument(tag + ": sigma_max must be >= 0");
    for (int k = 0; k < 3; ++k) {
      if (p.color[k] < 0.0 || p.color[k] > 1.0)
        throw std::invalid_argument(tag + ": color out of [0,1]");
      const double reach = p.shape == Primitive::Shape::Sphere ? p.size.x() : p.size[k];
      if (std::abs(p.center[k]) + reach > 1.0 + 1e-12)
        throw std::invalid_argument(tag + ": outside the 2x2x2 canonical cube");
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (background_color[k] < 0.0 || background_color[k] > 1.0)
      throw std::invalid_argument("background_color out of [0,1]");
  }
}

double primitive_signed_distance(const Primitive& prim, const Vec3& x, Vec3* grad) {
  const Vec3 rel = x - prim.center;
  if (prim.shape == Primitive::Shape::Sphere) {
    const double r = rel.norm();
    if (grad) *grad = r > 1e-12 ? Vec3(rel / r) : Vec3::Zero();
    return r - prim.size.x();
  }

  // Box: half extents in size. Outside, distance to the nearest face point;
  // inside, the (negative) distance to the closest face.
  const Vec3 q = rel.cwiseAbs() - prim.size;
  const Vec3 q_pos = q.cwiseMax(0.0);
  const double outside = q_pos.norm();
  if (outside > 0.0) {
    if (grad) {
      Vec3 g = q_pos / outside;
      for (int k = 0; k < 3; ++k) g[k] *= sign_of(rel[k]);
      *grad = g;
    }
    return outside;
  }
  int axis = 0;
  q.maxCoeff(&axis);
  if (grad) {
    Vec3 g = Vec3::Zero();
    g[axis] = sign_of(rel[axis]);
    *grad = g;
  }
  return q[axis];
}

SceneField::SceneField(SceneSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

FieldSample SceneField::sample(const Vec3& x) const {
  FieldSample out;
  Vec3 weighted_color = Vec3::Zero();
  Mat3 d_weighted_color = Mat3::Zero();

  for (const Primitive& p : spec_.primitives) {
    Vec3 sdf_grad;
    const double d = primitive_signed_distance(p, x, &sdf_grad);
    if (d >= p.edge_softness) continue;  // zero density and zero gradient out here
    const Occupancy occ = occupancy(d, p.edge_softness);
    const double sigma_p = p.sigma_max * occ.value;
    const Vec3 grad_p = (p.sigma_max * occ.d_value_dd) * sdf_grad;

    out.sigma += sigma_p;
    out.d_sigma_dx += grad_p;
    weighted_color += sigma_p * p.color;
    d_weighted_color += p.color * grad_p.transpose();
  }

  if (out.sigma > 0.0) {
    out.color = weighted_color / out.sigma;
    out.d_color_dx =
        (d_weighted_color - out.color * out.d_sigma_dx.transpose()) / out.sigma;
  } else {
    out.color = spec_.background_color;
  }
  return out;
}

LowpassField::LowpassField(const RadianceField& base, double kernel_sigma, int n_taps,
                           std::uint64_t seed)
    : base_(base) {
  if (kernel_sigma < 0.0) throw std::invalid_argument("kernel_sigma must be >= 0");
  if (n_taps < 1) throw std::invalid_argument("n_taps must be >= 1");
  if (kernel_sigma == 0.0) return;  // empty offsets: exact passthrough

  Rng rng(seed);
  const Vec3 shift(rng.uniform01(), rng.uniform01(), rng.uniform01());
  const std::uint64_t bases[3] = {2, 3, 5};

  offsets_.reserve(static_cast<std::size_t>(n_taps));
  const int n_pairs = n_taps / 2;
  for (int i = 0; i < n_pairs; ++i) {
    Vec3 z;
    for (int k = 0; k < 3; ++k) {
      double u = halton(static_cast<std::uint64_t>(i + 1), bases[k]) + shift[k];
      u -= std::floor(u);
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      z[k] = inverse_normal_cdf(u);
    }
    offsets_.push_back(kernel_sigma * z);
    offsets_.push_back(-kernel_sigma * z);
  }
  if (n_taps % 2 == 1) offsets_.push_back(Vec3::Zero());
}

FieldSample LowpassField::sample(const Vec3& x) const {
  if (offsets_.empty()) return base_.sample(x);

  FieldSample acc;
  for (const Vec3& offset : offsets_) {
    const FieldSample s = base_.sample(x + offset);
    acc.sigma += s.sigma;
    acc.color += s.color;
    acc.d_sigma_dx += s.d_sigma_dx;
    acc.d_color_dx += s.d_color_dx;
  }
  const double inv_n = 1.0 / static_cast<double>(offsets_.size());
  acc.sigma *= inv_n;
  acc.color *= inv_n;
  acc.d_sigma_dx *= inv_n;
  acc.d_color_dx *= inv_n;
  return acc;
}

}  // namespace invpose
