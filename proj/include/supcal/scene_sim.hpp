#ifndef SUPCAL_SCENE_SIM_HPP
#define SUPCAL_SCENE_SIM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "supcal/geometry.hpp"

namespace supcal {

/// A semantic category together with the noise model of the cross-modal
/// matcher for points of that category: isotropic Gaussian residual noise of
/// std residual_sigma, replaced with probability outlier_rate by noise of
/// std outlier_sigma.
struct SemanticClass {
  int id = 0;
  std::string name;
  double residual_sigma = 0.0;  // pixels
  double outlier_rate = 0.0;    // probability in [0, 1]
  double outlier_sigma = 0.0;   // pixels, >= residual_sigma
};

struct ScenePoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // meters, sensor frame
  int class_id = 0;
  std::int64_t point_id = 0;
};

/// A static world: class-labeled 3D points, the camera that observes them,
/// and the trusted extrinsics mapping the point frame into the camera frame.
struct Scene {
  std::vector<ScenePoint> points;
  CameraIntrinsics intrinsics;
  Pose reference_extrinsics;
  std::vector<SemanticClass> classes;
};

/// How a class's points fill its axis-aligned extent box. The scene frame is
/// x forward, y left, z up; "vertical" means along z.
enum class PointGenerator {
  kBox,     // uniform in the box
  kPlane,   // uniform on the mid-plane of the thinnest box axis
  kStrips,  // thin vertical columns (trunks, poles)
  kBlobs,   // Gaussian clusters clamped into the box (foliage)
};

struct ClassLayout {
  SemanticClass semantic;
  std::size_t count = 0;
  PointGenerator generator = PointGenerator::kBox;
  Eigen::Vector3d extent_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d extent_max = Eigen::Vector3d::Zero();
  int strip_count = 8;
  double strip_radius = 0.15;  // meters, horizontal jitter around a strip
  int blob_count = 12;
  double blob_sigma = 0.8;  // meters
};

struct SceneSpec {
  CameraIntrinsics intrinsics;
  Pose reference_extrinsics;
  std::vector<ClassLayout> classes;
};

/// One matched point: the projection u under the current extrinsic estimate,
/// the matcher residual f, and the matched location u_matched = u + f.
struct Correspondence {
  std::int64_t point_id = 0;
  int class_id = 0;
  Pixel u;
  Eigen::Vector2d f = Eigen::Vector2d::Zero();  // pixels (du, dv)
  Pixel u_matched;
};

/// Magnitude-exact random perturbation of a pose: the perturbed pose differs
/// from the input by exactly translation_magnitude meters and
/// rotation_magnitude_deg degrees, in a seeded random direction/axis.
struct PerturbationSpec {
  double translation_magnitude = 0.0;   // meters
  double rotation_magnitude_deg = 0.0;  // degrees
  std::uint64_t seed = 0;
};

/// Deterministically generates the scene described by `spec`. Point counts
/// per class match the spec exactly and every point lies inside its class's
/// extent box. Throws EmptySpec when no class is requested.
[[nodiscard]] Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

[[nodiscard]] Pose perturb_pose(const Pose& reference,
                                const PerturbationSpec& spec);

/// Simulates the cross-modal matching stage: for every scene point visible
/// under both `estimate` and the scene's reference extrinsics, emits the
/// projection under `estimate` and a residual that points to the reference
/// projection, corrupted by class-dependent noise. Throws NoVisiblePoints
/// when nothing projects into the image.
[[nodiscard]] std::vector<Correspondence> oracle_residuals(
    const Scene& scene, const Pose& estimate, std::uint64_t seed);

/// 3D positions for a correspondence list, resolved through point ids.
[[nodiscard]] std::vector<Eigen::Vector3d> correspondence_points(
    const Scene& scene, std::span<const Correspondence> corrs);

}  // namespace supcal

#endif  // SUPCAL_SCENE_SIM_HPP
