#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "invpose/lie_se3.hpp"
#include "invpose/rng.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace invpose;

namespace {

// Independent oracle: SE(3) exponential through the plain matrix series
// exp(A) = sum A^n / n! on the 4x4 twist matrix, 30 terms.
Pose exp_series_oracle(const Tangent& v) {
  Eigen::Matrix4d twist = Eigen::Matrix4d::Zero();
  twist.topLeftCorner<3, 3>() = skew(v.phi);
  twist.topRightCorner<3, 1>() = v.rho;

  Eigen::Matrix4d result = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int n = 1; n <= 30; ++n) {
    term = term * twist / static_cast<double>(n);
    result += term;
  }
  Pose p;
  p.rotation = result.topLeftCorner<3, 3>();
  p.translation = result.topRightCorner<3, 1>();
  return p;
}

Tangent random_tangent(Rng& rng, double rho_scale, double phi_max) {
  Tangent v;
  v.rho = rho_scale * rng.unit_sphere() * rng.uniform01();
  v.phi = rng.unit_sphere() * rng.uniform(0.0, phi_max);
  return v;
}

double pose_diff(const Pose& a, const Pose& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(),
                  (a.translation - b.translation).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("exp of zero tangent is the identity") {
  const Pose p = se3_exp(Tangent::zero());
  CHECK(pose_diff(p, Pose::identity()) == 0.0);
}

TEST_CASE("exp of a pure translation keeps rotation at identity") {
  Tangent v;
  v.rho = Vec3(1.0, 2.0, 3.0);
  const Pose p = se3_exp(v);
  CHECK((p.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p.translation - Vec3(1.0, 2.0, 3.0)).norm() == 0.0);
}

TEST_CASE("exp of a quarter turn about x maps +y to +z") {
  Tangent v;
  v.phi = Vec3(M_PI / 2.0, 0.0, 0.0);
  const Pose p = se3_exp(v);
  CHECK((p.rotation * Vec3::UnitY() - Vec3::UnitZ()).norm() < 1e-12);
  CHECK(p.translation.norm() == 0.0);
  CHECK(pose_diff(p, exp_series_oracle(v)) < 1e-12);
}

TEST_CASE("exp matches the matrix-series oracle on random tangents") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Tangent v = random_tangent(rng, 3.0, 3.0);
    CHECK(pose_diff(se3_exp(v), exp_series_oracle(v)) < 1e-11);
  }
}

TEST_CASE("exp rejects non-finite input") {
  Tangent v;
  v.rho.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(se3_exp(v), "non-finite tangent", std::invalid_argument);
}

TEST_CASE("log of identity is zero") {
  const Tangent v = se3_log(Pose::identity());
  CHECK(v.rho.norm() == 0.0);
  CHECK(v.phi.norm() == 0.0);
}

TEST_CASE("log of a pure translation recovers it") {
  Pose p;
  p.translation = Vec3(1.0, 2.0, 3.0);
  const Tangent v = se3_log(p);
  CHECK((v.rho - Vec3(1.0, 2.0, 3.0)).norm() < 1e-12);
  CHECK(v.phi.norm() == 0.0);
}

TEST_CASE("log . exp round trip on a fixed tangent") {
  Tangent v;
  v.rho = Vec3(0.1, -0.2, 0.3);
  v.phi = Vec3(0.4, 0.5, -0.6);
  const Tangent w = se3_log(se3_exp(v));
  CHECK((w.to_vec6() - v.to_vec6()).norm() < 1e-12);
}

TEST_CASE("exp/log round trip under 1e-8 for 1e4 random tangents") {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Tangent v = random_tangent(rng, 3.0, 3.0);
    const Tangent w = se3_log(se3_exp(v));
    worst = std::max(worst, (w.to_vec6() - v.to_vec6()).norm());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("log throws near the branch cut") {
  Tangent v;
  v.phi = Vec3(M_PI - 1e-8, 0.0, 0.0);
  const Pose p = se3_exp(v);
  CHECK_THROWS_WITH_AS(se3_log(p), "log branch singularity", std::domain_error);
}

TEST_CASE("oplus identities") {
  Rng rng(13);
  const Tangent v = random_tangent(rng, 1.0, 1.5);
  const Pose p = se3_exp(random_tangent(rng, 1.0, 1.5));

  CHECK(pose_diff(oplus(p, Tangent::zero()), p) == 0.0);
  CHECK(pose_diff(oplus(Pose::identity(), v), se3_exp(v)) < 1e-15);

  Tangent neg;
  neg.rho = -v.rho;
  neg.phi = -v.phi;
  CHECK(pose_diff(oplus(oplus(p, v), neg), p) < 1e-9);
}

TEST_CASE("compose/inverse identity and orthonormality over long chains") {
  Rng rng(17);
  Pose chain = Pose::identity();
  for (int i = 0; i < 10000; ++i) {
    chain = compose(chain, se3_exp(random_tangent(rng, 0.1, 0.2)));
  }
  CHECK(chain.orthonormality_defect() < 1e-9);
  const Pose round = compose(chain, inverse(chain));
  CHECK(pose_diff(round, Pose::identity()) < 1e-9);
}

TEST_CASE("pose_errors basics") {
  Rng rng(19);
  const Pose p = se3_exp(random_tangent(rng, 1.0, 1.0));
  const PoseErrors zero = pose_errors(p, p);
  CHECK(zero.trans == 0.0);
  CHECK(zero.rot == 0.0);

  Pose shifted = p;
  shifted.translation += Vec3(0.3, 0.4, 0.0);
  const PoseErrors e = pose_errors(shifted, p);
  CHECK(e.trans == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e.rot == doctest::Approx(0.0));

  Tangent quarter;
  quarter.phi = Vec3(0.0, 0.0, M_PI / 4.0);
  Pose rotated = p;
  rotated.rotation = p.rotation * se3_exp(quarter).rotation;
  const PoseErrors r = pose_errors(rotated, p);
  CHECK(r.trans == doctest::Approx(0.0));
  CHECK(r.rot == doctest::Approx(M_PI / 4.0).epsilon(1e-9));
}

TEST_CASE("oplus locality: small tangents map to matching pose errors") {
  Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    Tangent v;
    v.rho = rng.unit_sphere() * rng.uniform(1e-4, 1e-3);
    v.phi = rng.unit_sphere() * rng.uniform(1e-4, 1e-3);
    const Pose p = se3_exp(random_tangent(rng, 1.0, 1.5));
    const PoseErrors e = pose_errors(oplus(p, v), p);
    CHECK(e.trans == doctest::Approx(v.rho.norm()).epsilon(0.01));
    CHECK(e.rot == doctest::Approx(v.phi.norm()).epsilon(0.01));
  }
}

TEST_CASE("sample_perturbation lengths are exact") {
  const Tangent zero = sample_perturbation(0.0, 0.0, 42);
  CHECK(zero.rho.norm() == 0.0);
  CHECK(zero.phi.norm() == 0.0);

  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Tangent v = sample_perturbation(1.2, 0.7, seed);
    CHECK(std::abs(v.rho.norm() - 1.2) < 1e-12);
    CHECK(std::abs(v.phi.norm() - 0.7) < 1e-12);
  }
}

TEST_CASE("sample_perturbation is deterministic per seed") {
  const Tangent a = sample_perturbation(0.5, 0.3, 123);
  const Tangent b = sample_perturbation(0.5, 0.3, 123);
  CHECK((a.to_vec6() - b.to_vec6()).norm() == 0.0);
  const Tangent c = sample_perturbation(0.5, 0.3, 124);
  CHECK((a.to_vec6() - c.to_vec6()).norm() > 0.0);
}

TEST_CASE("sample_perturbation directions are unbiased on the sphere") {
  // Monte-Carlo oracle for uniformity: the empirical mean direction over
  // 1e4 seeds stays near the origin.
  Vec3 mean_rho = Vec3::Zero();
  Vec3 mean_phi = Vec3::Zero();
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Tangent v = sample_perturbation(1.0, 1.0, seed);
    mean_rho += v.rho;
    mean_phi += v.phi;
  }
  CHECK((mean_rho / 10000.0).norm() < 0.05);
  CHECK((mean_phi / 10000.0).norm() < 0.05);
}

TEST_CASE("adjoint satisfies exp(Ad_T v) = T exp(v) T^-1") {
  Rng rng(29);
  for (int i = 0; i < 20; ++i) {
    const Pose t = se3_exp(random_tangent(rng, 1.0, 1.5));
    const Tangent v = random_tangent(rng, 0.5, 0.5);
    const Pose lhs = se3_exp(Tangent::from_vec6(adjoint(t) * v.to_vec6()));
    const Pose rhs = compose(compose(t, se3_exp(v)), inverse(t));
    CHECK(pose_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("right Jacobian matches finite differences of exp") {
  Rng rng(31);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const Tangent v = random_tangent(rng, 1.0, 1.5);
    const Mat6 jr = se3_right_jacobian(v);
    for (int k = 0; k < 6; ++k) {
      Vec6 dv = Vec6::Zero();
      dv[k] = h;
      // exp(v + h e_k) ~= exp(v) * exp(J_r h e_k)
      const Pose lhs = se3_exp(Tangent::from_vec6(v.to_vec6() + dv));
      const Pose rhs = compose(se3_exp(v), se3_exp(Tangent::from_vec6(jr * dv)));
      CHECK(pose_diff(lhs, rhs) < 1e-10);
    }
  }
  CHECK((se3_right_jacobian(Tangent::zero()) - Mat6::Identity()).cwiseAbs().maxCoeff() == 0.0);
}
