// SE(3) / se(3) operations used throughout the pose estimation pipeline:
// exponential and logarithm maps, the right-oplus retraction, pose error
// metrics and fixed-length random perturbation sampling.
//
// Conventions
// -----------
// Tangent ordering: [rho, phi] with rho the translational part (meters)
// and phi the rotational part (axis-angle, radians).
// Retraction: oplus(T, v) = T * exp(v)  (right multiplication, local frame).

#ifndef INVPOSE_LIE_SE3_HPP
#define INVPOSE_LIE_SE3_HPP

#include <Eigen/Core>

#include <cstdint>

namespace invpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Rigid transform in SE(3). `rotation` is orthonormal with det +1.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }

  /// Applies the transform to a point: R*x + t.
  Vec3 operator*(const Vec3& x) const { return rotation * x + translation; }

  /// Max elementwise deviation of R^T R from the identity.
  double orthonormality_defect() const;

  /// Nearest rotation via polar decomposition (det forced to +1).
  Pose renormalized() const;
};

/// Element of se(3): rho = translational component (m), phi = rotational
/// component (axis-angle, rad).
struct Tangent {
  Vec3 rho = Vec3::Zero();
  Vec3 phi = Vec3::Zero();

  static Tangent zero() { return Tangent{}; }
  static Tangent from_vec6(const Vec6& v) { return Tangent{v.head<3>(), v.tail<3>()}; }

  Vec6 to_vec6() const {
    Vec6 v;
    v << rho, phi;
    return v;
  }

  bool is_finite() const { return rho.allFinite() && phi.allFinite(); }
};

/// skew(v) * u == v x u
Mat3 skew(const Vec3& v);

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// SE(3) exponential map (Rodrigues rotation plus V-matrix translation
/// coupling). Throws std::invalid_argument("non-finite tangent") on
/// non-finite input.
Pose se3_exp(const Tangent& v);

/// SE(3) logarithm, principal branch. Throws std::domain_error
/// ("log branch singularity") when the rotation angle is within 1e-6 of pi.
Tangent se3_log(const Pose& p);

/// Right retraction: T * exp(v). Re-orthonormalizes the result when the
/// defect exceeds 1e-9.
Pose oplus(const Pose& p, const Tangent& v);

struct PoseErrors {
  double trans = 0.0;  ///< Euclidean translation distance (m)
  double rot = 0.0;    ///< geodesic rotation angle in [0, pi] (rad)
};

PoseErrors pose_errors(const Pose& estimate, const Pose& ground_truth);

/// Random tangent with ||rho|| == trans_len and ||phi|| == rot_len exactly;
/// both directions drawn independently and uniformly on the unit sphere.
/// Deterministic for a given seed.
Tangent sample_perturbation(double trans_len, double rot_len, std::uint64_t seed);

/// Adjoint matrix of T acting on [rho, phi] tangents:
/// exp(adjoint(T) * v) == T * exp(v) * T^-1.
Mat6 adjoint(const Pose& p);

/// Right Jacobian of SE(3): exp(v + dv) ~= exp(v) * exp(J_r(v) * dv).
/// Evaluated through the convergent ad-series to machine precision.
Mat6 se3_right_jacobian(const Tangent& v);

}  // namespace invpose

#endif  // INVPOSE_LIE_SE3_HPP
