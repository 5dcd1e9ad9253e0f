#include "supcal/scene_sim.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "supcal/errors.hpp"
#include "supcal/rng.hpp"

namespace supcal {

namespace {

double clamped(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

Eigen::Vector3d uniform_in_box(Rng& rng, const Eigen::Vector3d& lo,
                               const Eigen::Vector3d& hi) {
  return {rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
          rng.uniform(lo.z(), hi.z())};
}

// Axis with the smallest extent; the plane generator collapses it.
int thinnest_axis(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  const Eigen::Vector3d span = hi - lo;
  int axis = 0;
  span.minCoeff(&axis);
  return axis;
}

void generate_class_points(const ClassLayout& layout, Rng& rng,
                           std::vector<Eigen::Vector3d>& out) {
  const Eigen::Vector3d& lo = layout.extent_min;
  const Eigen::Vector3d& hi = layout.extent_max;
  out.reserve(out.size() + layout.count);

  switch (layout.generator) {
    case PointGenerator::kBox: {
      for (std::size_t i = 0; i < layout.count; ++i) {
        out.push_back(uniform_in_box(rng, lo, hi));
      }
      break;
    }
    case PointGenerator::kPlane: {
      const int axis = thinnest_axis(lo, hi);
      const double mid = 0.5 * (lo[axis] + hi[axis]);
      for (std::size_t i = 0; i < layout.count; ++i) {
        Eigen::Vector3d p = uniform_in_box(rng, lo, hi);
        p[axis] = mid;
        out.push_back(p);
      }
      break;
    }
    case PointGenerator::kStrips: {
      const int strips = std::max(1, layout.strip_count);
      std::vector<Eigen::Vector2d> centers(static_cast<std::size_t>(strips));
      for (auto& c : centers) {
        c = {rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y())};
      }
      for (std::size_t i = 0; i < layout.count; ++i) {
        const auto& c = centers[i % centers.size()];
        Eigen::Vector3d p;
        p.x() = clamped(c.x() + layout.strip_radius * rng.normal(), lo.x(), hi.x());
        p.y() = clamped(c.y() + layout.strip_radius * rng.normal(), lo.y(), hi.y());
        p.z() = rng.uniform(lo.z(), hi.z());
        out.push_back(p);
      }
      break;
    }
    case PointGenerator::kBlobs: {
      const int blobs = std::max(1, layout.blob_count);
      std::vector<Eigen::Vector3d> centers(static_cast<std::size_t>(blobs));
      for (auto& c : centers) {
        c = uniform_in_box(rng, lo, hi);
      }
      for (std::size_t i = 0; i < layout.count; ++i) {
        const auto& c = centers[i % centers.size()];
        Eigen::Vector3d p;
        for (int axis = 0; axis < 3; ++axis) {
          p[axis] = clamped(c[axis] + layout.blob_sigma * rng.normal(),
                            lo[axis], hi[axis]);
        }
        out.push_back(p);
      }
      break;
    }
  }
}

}  // namespace

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.classes.empty()) {
    throw EmptySpec("generate_scene: no class requested");
  }
  for (const auto& layout : spec.classes) {
    if ((layout.extent_max.array() < layout.extent_min.array()).any()) {
      throw std::invalid_argument("generate_scene: extent_max < extent_min");
    }
    const auto& c = layout.semantic;
    if (c.residual_sigma < 0.0 || c.outlier_rate < 0.0 || c.outlier_rate > 1.0 ||
        c.outlier_sigma < c.residual_sigma) {
      throw std::invalid_argument("generate_scene: invalid class noise model");
    }
  }

  Scene scene;
  scene.intrinsics = spec.intrinsics;
  scene.reference_extrinsics = spec.reference_extrinsics;

  std::int64_t next_id = 0;
  for (std::size_t k = 0; k < spec.classes.size(); ++k) {
    const ClassLayout& layout = spec.classes[k];
    scene.classes.push_back(layout.semantic);

    Rng rng(derive_seed(seed, streams::kScene, k));
    std::vector<Eigen::Vector3d> positions;
    generate_class_points(layout, rng, positions);
    for (const auto& p : positions) {
      scene.points.push_back({p, layout.semantic.id, next_id++});
    }
  }
  return scene;
}

Pose perturb_pose(const Pose& reference, const PerturbationSpec& spec) {
  if (spec.translation_magnitude < 0.0 || spec.rotation_magnitude_deg < 0.0) {
    throw std::invalid_argument("perturb_pose: negative magnitude");
  }
  Rng rng(spec.seed);
  const Eigen::Vector3d direction = rng.unit_vector();
  const Eigen::Vector3d axis = rng.unit_vector();

  Twist rot;
  rot.phi = axis * (spec.rotation_magnitude_deg * M_PI / 180.0);
  const Pose delta_rot = se3_exp(rot);

  Pose out;
  out.rotation = delta_rot.rotation * reference.rotation;
  out.translation = reference.translation + spec.translation_magnitude * direction;
  return out;
}

std::vector<Correspondence> oracle_residuals(const Scene& scene,
                                             const Pose& estimate,
                                             std::uint64_t seed) {
  std::unordered_map<int, const SemanticClass*> class_by_id;
  for (const auto& c : scene.classes) {
    class_by_id[c.id] = &c;
  }

  Rng rng(seed);
  std::vector<Correspondence> corrs;
  corrs.reserve(scene.points.size());

  for (const auto& pt : scene.points) {
    const auto it = class_by_id.find(pt.class_id);
    if (it == class_by_id.end()) {
      throw std::invalid_argument("oracle_residuals: point references unknown class");
    }
    const auto proj_est = project(scene.intrinsics,
                                  transform_point(estimate, pt.position));
    const auto proj_ref =
        project(scene.intrinsics,
                transform_point(scene.reference_extrinsics, pt.position));
    if (!proj_est || !proj_ref || !visible(scene.intrinsics, *proj_est) ||
        !visible(scene.intrinsics, *proj_ref)) {
      continue;
    }

    const SemanticClass& cls = *it->second;
    const double sigma =
        rng.bernoulli(cls.outlier_rate) ? cls.outlier_sigma : cls.residual_sigma;
    const Eigen::Vector2d noise = sigma * rng.normal2();

    Correspondence corr;
    corr.point_id = pt.point_id;
    corr.class_id = pt.class_id;
    corr.u = *proj_est;
    corr.f = Eigen::Vector2d(proj_ref->u - proj_est->u,
                             proj_ref->v - proj_est->v) +
             noise;
    corr.u_matched = {corr.u.u + corr.f.x(), corr.u.v + corr.f.y()};
    corrs.push_back(corr);
  }

  if (corrs.empty()) {
    throw NoVisiblePoints("oracle_residuals: no point visible under both poses");
  }
  return corrs;
}

std::vector<Eigen::Vector3d> correspondence_points(
    const Scene& scene, std::span<const Correspondence> corrs) {
  std::unordered_map<std::int64_t, const ScenePoint*> by_id;
  by_id.reserve(scene.points.size());
  for (const auto& pt : scene.points) {
    by_id[pt.point_id] = &pt;
  }
  std::vector<Eigen::Vector3d> out;
  out.reserve(corrs.size());
  for (const auto& corr : corrs) {
    const auto it = by_id.find(corr.point_id);
    if (it == by_id.end()) {
      throw std::invalid_argument("correspondence_points: unknown point id");
    }
    out.push_back(it->second->position);
  }
  return out;
}

}  // namespace supcal
