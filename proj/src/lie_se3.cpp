#include "invpose/lie_se3.hpp"

#include "invpose/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace invpose {

namespace {

constexpr double kSmallAngle = 1e-5;   // Taylor branch below this angle
constexpr double kLogBranchGuard = 1e-6;

// sin(t)/t, (1-cos(t))/t^2, (t-sin(t))/t^3 with Taylor fallbacks.
struct TrigCoeffs {
  double a;  // sin(t)/t
  double b;  // (1-cos(t))/t^2
  double c;  // (t-sin(t))/t^3
};

TrigCoeffs trig_coeffs(double theta) {
  TrigCoeffs k{};
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    k.a = 1.0 - t2 / 6.0;
    k.b = 0.5 - t2 / 24.0;
    k.c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    k.a = s / theta;
    k.b = (1.0 - c) / t2;
    k.c = (theta - s) / (t2 * theta);
  }
  return k;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

double Pose::orthonormality_defect() const {
  return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Pose Pose::renormalized() const {
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return Pose{r, translation};
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose{a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose inverse(const Pose& p) {
  Mat3 rt = p.rotation.transpose();
  return Pose{rt, -(rt * p.translation)};
}

Pose se3_exp(const Tangent& v) {
  if (!v.is_finite()) throw std::invalid_argument("non-finite tangent");

  const double theta = v.phi.norm();
  const TrigCoeffs k = trig_coeffs(theta);
  const Mat3 K = skew(v.phi);
  const Mat3 K2 = K * K;

  Pose out;
  out.rotation = Mat3::Identity() + k.a * K + k.b * K2;
  const Mat3 V = Mat3::Identity() + k.b * K + k.c * K2;
  out.translation = V * v.rho;
  return out;
}

Tangent se3_log(const Pose& p) {
  const double cos_theta = std::clamp((p.rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta >= M_PI - kLogBranchGuard) throw std::domain_error("log branch singularity");

  Tangent v;
  const Vec3 w = vee(p.rotation - p.rotation.transpose()) * 0.5;  // sin(theta) * axis
  if (theta < kSmallAngle) {
    v.phi = w * (1.0 + theta * theta / 6.0);
  } else {
    v.phi = w * (theta / std::sin(theta));
  }

  const Mat3 K = skew(v.phi);
  const Mat3 K2 = K * K;
  double coeff;
  if (theta < kSmallAngle) {
    coeff = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    coeff = 1.0 / (theta * theta) -
            (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  const Mat3 v_inv = Mat3::Identity() - 0.5 * K + coeff * K2;
  v.rho = v_inv * p.translation;
  return v;
}

Pose oplus(const Pose& p, const Tangent& v) {
  Pose out = compose(p, se3_exp(v));
  if (out.orthonormality_defect() > 1e-9) out = out.renormalized();
  return out;
}

PoseErrors pose_errors(const Pose& estimate, const Pose& ground_truth) {
  PoseErrors e;
  e.trans = (estimate.translation - ground_truth.translation).norm();
  const Mat3 rel = ground_truth.rotation.transpose() * estimate.rotation;
  e.rot = std::acos(std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0));
  return e;
}

Tangent sample_perturbation(double trans_len, double rot_len, std::uint64_t seed) {
  Rng rng(seed);
  Tangent v;
  v.rho = trans_len * rng.unit_sphere();
  v.phi = rot_len * rng.unit_sphere();
  return v;
}

Mat6 adjoint(const Pose& p) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = p.rotation;
  ad.topRightCorner<3, 3>() = skew(p.translation) * p.rotation;
  ad.bottomRightCorner<3, 3>() = p.rotation;
  return ad;
}

Mat6 se3_right_jacobian(const Tangent& v) {
  // J_r(v) = sum_{n>=0} (-ad_v)^n / (n+1)!; the series is entire and the
  // perturbations handled here keep ||ad_v|| small enough for fast decay.
  Mat6 ad = Mat6::Zero();
  const Mat3 K = skew(v.phi);
  ad.topLeftCorner<3, 3>() = K;
  ad.topRightCorner<3, 3>() = skew(v.rho);
  ad.bottomRightCorner<3, 3>() = K;
  const Mat6 neg_ad = -ad;

  Mat6 result = Mat6::Identity();
  Mat6 term = Mat6::Identity();
  for (int n = 1; n <= 60; ++n) {
    term = term * neg_ad / static_cast<double>(n + 1);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  return result;
}

}  // namespace invpose
