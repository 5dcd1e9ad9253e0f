#include <doctest.h>

#include <cmath>

#include "supcal/geometry.hpp"
#include "supcal/rng.hpp"

using namespace supcal;

namespace {

Twist random_twist(Rng& rng, double max_angle) {
  Twist xi;
  xi.rho = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
            rng.uniform(-5.0, 5.0)};
  xi.phi = rng.unit_vector() * rng.uniform(0.0, max_angle);
  return xi;
}

Pose random_pose(Rng& rng) {
  Twist xi = random_twist(rng, 2.5);
  return se3_exp(xi);
}

}  // namespace

TEST_CASE("se3_exp of the zero twist is the identity") {
  const Pose pose = se3_exp(Twist{});
  CHECK(pose.rotation.isApprox(Eigen::Matrix3d::Identity(), 0.0));
  CHECK(pose.translation.isZero(0.0));
}

TEST_CASE("se3_exp of a pure translation keeps rotation identity") {
  Twist xi;
  xi.rho = {1.0, 2.0, 3.0};
  const Pose pose = se3_exp(xi);
  CHECK(pose.rotation.isApprox(Eigen::Matrix3d::Identity(), 0.0));
  CHECK(pose.translation.isApprox(Eigen::Vector3d(1.0, 2.0, 3.0), 0.0));
}

TEST_CASE("se3_exp of a quarter turn about z maps x to y") {
  Twist xi;
  xi.phi = {0.0, 0.0, M_PI / 2.0};
  const Pose pose = se3_exp(xi);
  const Eigen::Vector3d mapped = pose.rotation * Eigen::Vector3d::UnitX();
  CHECK(mapped.isApprox(Eigen::Vector3d::UnitY(), 1e-15));
  CHECK(pose.translation.isZero(0.0));
}

TEST_CASE("se3_log of the identity is the zero twist") {
  const Twist xi = se3_log(Pose{});
  CHECK(xi.rho.isZero(0.0));
  CHECK(xi.phi.isZero(0.0));
}

TEST_CASE("se3_log inverts se3_exp on a specific twist") {
  Twist xi;
  xi.rho = {0.1, 0.0, 0.0};
  xi.phi = {0.0, 0.2, 0.0};
  const Twist back = se3_log(se3_exp(xi));
  CHECK((back.rho - xi.rho).norm() < 1e-10);
  CHECK((back.phi - xi.phi).norm() < 1e-10);
}

TEST_CASE("exp/log roundtrip stays below 1e-9 over 1000 random twists") {
  Rng rng(901);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Twist xi = random_twist(rng, 3.0);
    const Twist back = se3_log(se3_exp(xi));
    worst = std::max(worst, (back.rho - xi.rho).norm());
    worst = std::max(worst, (back.phi - xi.phi).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("exp/log roundtrip is exact through the small-angle series") {
  Twist xi;
  xi.rho = {0.3, -0.2, 0.7};
  xi.phi = {1e-10, -2e-10, 5e-11};
  const Pose pose = se3_exp(xi);
  CHECK(is_valid_pose(pose));
  const Twist back = se3_log(pose);
  CHECK((back.rho - xi.rho).norm() < 1e-15);
  CHECK((back.phi - xi.phi).norm() < 1e-15);
}

TEST_CASE("se3_log rejects rotations at the pi singularity") {
  Twist xi;
  xi.phi = Eigen::Vector3d::UnitX() * (M_PI - 1e-7);
  CHECK_THROWS_AS((void)se3_log(se3_exp(xi)), NearPiRotation);

  // Just below the guard the log is still well defined.
  xi.phi = Eigen::Vector3d::UnitX() * (M_PI - 1e-4);
  const Twist back = se3_log(se3_exp(xi));
  CHECK((back.phi - xi.phi).norm() < 1e-8);
}

TEST_CASE("compose with the identity is a no-op") {
  Rng rng(902);
  const Pose pose = random_pose(rng);
  const Pose left = compose(Pose{}, pose);
  CHECK(left.rotation.isApprox(pose.rotation, 1e-15));
  CHECK(left.translation.isApprox(pose.translation, 1e-15));
}

TEST_CASE("compose with the inverse gives the identity") {
  Rng rng(903);
  const Pose pose = random_pose(rng);
  const Pose round = compose(pose, inverse(pose));
  CHECK((round.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(round.translation.norm() < 1e-12);
}

TEST_CASE("two eighth turns compose into a quarter turn") {
  Twist eighth;
  eighth.phi = {0.0, 0.0, M_PI / 4.0};
  Twist quarter;
  quarter.phi = {0.0, 0.0, M_PI / 2.0};
  const Pose composed = compose(se3_exp(eighth), se3_exp(eighth));
  const Pose direct = se3_exp(quarter);
  CHECK((composed.rotation - direct.rotation).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("compose is associative within 1e-9 on random triples") {
  Rng rng(904);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose c = random_pose(rng);
    const Pose left = compose(compose(a, b), c);
    const Pose right = compose(a, compose(b, c));
    CHECK((left.rotation - right.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((left.translation - right.translation).norm() < 1e-9);
  }
}

TEST_CASE("transform_point applies rotation then translation") {
  CHECK(transform_point(Pose{}, Eigen::Vector3d(1.0, 2.0, 3.0))
            .isApprox(Eigen::Vector3d(1.0, 2.0, 3.0), 0.0));

  Pose lift;
  lift.translation = {0.0, 0.0, 1.0};
  CHECK(transform_point(lift, Eigen::Vector3d(0.0, 0.0, 0.0))
            .isApprox(Eigen::Vector3d(0.0, 0.0, 1.0), 0.0));

  Twist xi;
  xi.phi = {0.0, 0.0, M_PI / 2.0};
  const Eigen::Vector3d turned =
      transform_point(se3_exp(xi), Eigen::Vector3d(Eigen::Vector3d::UnitX()));
  CHECK((turned - Eigen::Vector3d::UnitY()).norm() < 1e-12);
}

TEST_CASE("project places the optical axis on the principal point") {
  const CameraIntrinsics intr{500.0, 500.0, 320.0, 240.0, 640, 480};
  const auto px = project(intr, Eigen::Vector3d(0.0, 0.0, 5.0));
  REQUIRE(px.has_value());
  CHECK(px->u == 320.0);
  CHECK(px->v == 240.0);

  const auto off = project(intr, Eigen::Vector3d(1.0, 0.0, 5.0));
  REQUIRE(off.has_value());
  CHECK(off->u == 420.0);
  CHECK(off->v == 240.0);
}

TEST_CASE("project rejects points at or behind the near plane") {
  const CameraIntrinsics intr{500.0, 500.0, 320.0, 240.0, 640, 480};
  CHECK_FALSE(project(intr, Eigen::Vector3d(0.0, 0.0, -1.0)).has_value());
  CHECK_FALSE(project(intr, Eigen::Vector3d(0.0, 0.0, 0.0)).has_value());
  CHECK_FALSE(project(intr, Eigen::Vector3d(1.0, 1.0, 1e-3)).has_value());
}

TEST_CASE("project is invariant to positive scaling of the ray") {
  const CameraIntrinsics intr{500.0, 500.0, 320.0, 240.0, 640, 480};
  Rng rng(905);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d p(rng.uniform(-2.0, 2.0), rng.uniform(-1.5, 1.5),
                            rng.uniform(1.0, 10.0));
    const double lambda = rng.uniform(0.5, 4.0);
    const auto a = project(intr, p);
    const auto b = project(intr, Eigen::Vector3d(lambda * p));
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(std::abs(a->u - b->u) < 1e-9);
    CHECK(std::abs(a->v - b->v) < 1e-9);
  }
}

TEST_CASE("visible checks the image bounds") {
  const CameraIntrinsics intr{500.0, 500.0, 320.0, 240.0, 640, 480};
  CHECK(visible(intr, Pixel{0.0, 0.0}));
  CHECK(visible(intr, Pixel{639.9, 479.9}));
  CHECK_FALSE(visible(intr, Pixel{640.0, 100.0}));
  CHECK_FALSE(visible(intr, Pixel{100.0, 480.0}));
  CHECK_FALSE(visible(intr, Pixel{-0.1, 100.0}));
}

TEST_CASE("projection jacobian entries on the optical axis") {
  const CameraIntrinsics intr{500.0, 500.0, 320.0, 240.0, 640, 480};
  const auto J = projection_jacobian_at(intr, Eigen::Vector3d(0.0, 0.0, 5.0));
  REQUIRE(J.has_value());
  CHECK((*J)(0, 0) == doctest::Approx(100.0).epsilon(1e-12));  // du/drho_x
  CHECK((*J)(0, 2) == 0.0);      // du/drho_z
  CHECK((*J)(1, 1) == doctest::Approx(100.0).epsilon(1e-12));  // dv/drho_y
}

TEST_CASE("analytic jacobian matches central differences on 200 configs") {
  Rng rng(906);
  const double h = 1e-6;
  double worst = 0.0;
  int tested = 0;
  while (tested < 200) {
    CameraIntrinsics intr;
    intr.fx = rng.uniform(300.0, 800.0);
    intr.fy = rng.uniform(300.0, 800.0);
    intr.cx = rng.uniform(300.0, 340.0);
    intr.cy = rng.uniform(220.0, 260.0);
    intr.width = 640;
    intr.height = 480;
    const Pose pose = random_pose(rng);
    // Sample a camera-frame target and pull it back so visibility is likely.
    const Eigen::Vector3d q_target(rng.uniform(-2.0, 2.0),
                                   rng.uniform(-1.5, 1.5),
                                   rng.uniform(2.0, 15.0));
    const Eigen::Vector3d p = transform_point(inverse(pose), q_target);

    const auto px = project(intr, transform_point(pose, p));
    if (!px.has_value() || !visible(intr, *px)) {
      continue;
    }
    ++tested;

    const auto J = project_jacobian(intr, pose, p);
    REQUIRE(J.has_value());

    for (int col = 0; col < 6; ++col) {
      Twist plus, minus;
      Eigen::Matrix<double, 6, 1> unit = Eigen::Matrix<double, 6, 1>::Zero();
      unit[col] = h;
      plus.rho = unit.head<3>();
      plus.phi = unit.tail<3>();
      minus.rho = -unit.head<3>();
      minus.phi = -unit.tail<3>();
      const auto fwd =
          project(intr, transform_point(compose(se3_exp(plus), pose), p));
      const auto bwd =
          project(intr, transform_point(compose(se3_exp(minus), pose), p));
      REQUIRE(fwd.has_value());
      REQUIRE(bwd.has_value());
      const double du = (fwd->u - bwd->u) / (2.0 * h);
      const double dv = (fwd->v - bwd->v) / (2.0 * h);
      worst = std::max(
          worst, std::abs((*J)(0, col) - du) / std::max(1.0, std::abs(du)));
      worst = std::max(
          worst, std::abs((*J)(1, col) - dv) / std::max(1.0, std::abs(dv)));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("pose_error of identical poses is zero") {
  Rng rng(907);
  const Pose pose = random_pose(rng);
  const PoseError err = pose_error(pose, pose);
  CHECK(err.translation == 0.0);
  CHECK(err.rotation_deg < 1e-6);
}

TEST_CASE("pose_error separates translation and rotation") {
  Pose a, b;
  b.translation = {0.1, 0.0, 0.0};
  const PoseError t = pose_error(a, b);
  CHECK(t.translation == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(t.rotation_deg == 0.0);

  Twist xi;
  xi.phi = {0.0, 0.0, M_PI / 2.0};
  const PoseError r = pose_error(a, se3_exp(xi));
  CHECK(r.translation == 0.0);
  CHECK(r.rotation_deg == doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("is_valid_pose rejects non-orthonormal and reflected rotations") {
  Pose pose;
  CHECK(is_valid_pose(pose));
  pose.rotation(0, 0) = 1.5;
  CHECK_FALSE(is_valid_pose(pose));
  pose.rotation = Eigen::Matrix3d::Identity();
  pose.rotation(2, 2) = -1.0;  // reflection, det = -1
  pose.rotation(1, 1) = -1.0;
  CHECK(is_valid_pose(pose));  // rotation by pi about x is proper
  pose.rotation = Eigen::Matrix3d::Identity();
  pose.rotation(2, 2) = -1.0;
  CHECK_FALSE(is_valid_pose(pose));
}

TEST_CASE("orthonormalized repairs drifted rotations") {
  Rng rng(908);
  const Pose pose = random_pose(rng);
  Eigen::Matrix3d drifted = pose.rotation;
  drifted(0, 1) += 1e-6;
  const Eigen::Matrix3d repaired = orthonormalized(drifted);
  CHECK(orthonormality_drift(repaired) < 1e-12);
  CHECK((repaired - pose.rotation).cwiseAbs().maxCoeff() < 1e-5);
}
