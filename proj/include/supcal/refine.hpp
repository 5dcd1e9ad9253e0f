#ifndef SUPCAL_REFINE_HPP
#define SUPCAL_REFINE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "supcal/geometry.hpp"
#include "supcal/scene_sim.hpp"

namespace supcal {

/// How many correspondence indices to draw and how.
struct SamplingPlan {
  int k = 2000;
  bool with_replacement = false;
  std::uint64_t seed = 0;
};

/// Levenberg-Marquardt controls. Damping multiplies the diagonal of the
/// normal matrix (Marquardt scaling), so a uniform rescaling of all weights
/// cancels out of the step equation.
struct RefineOptions {
  int max_iterations = 100;
  double cost_tolerance = 1e-10;  // relative decrease of the weighted cost
  double step_tolerance = 1e-12;  // twist norm of the accepted step
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double huber_delta = 0.0;  // pixels; <= 0 disables robustification
};

struct RefineResult {
  Pose delta;    // left-multiplied correction
  Pose refined;  // compose(delta, initial estimate)
  int iterations = 0;
  double initial_cost = 0.0;  // weighted squared pixels
  double final_cost = 0.0;
  bool converged = false;
  std::vector<double> cost_trace;  // initial cost, then each accepted cost
};

/// Normalizes nonnegative support values into a probability vector
/// p_i = s_i / sum_j s_j. Throws DegenerateSupport when every value is zero.
[[nodiscard]] Eigen::VectorXd support_distribution(
    std::span<const double> supports);

/// Draws plan.k indices distributed according to p, deterministically per
/// plan.seed. Without replacement, remaining weights renormalize after each
/// draw; indices with p_i = 0 are never selected. Throws
/// InsufficientPopulation when k exceeds the number of nonzero-probability
/// indices (without replacement).
[[nodiscard]] std::vector<int> sgis_sample(const Eigen::VectorXd& p,
                                           const SamplingPlan& plan);

/// Minimizes the weighted reprojection objective
///   sum_{i in sampled} supports[i] * |u_matched_i - proj(exp(xi) T0 p_i)|^2
/// over the 6-DoF twist xi of a left-multiplied increment, by
/// Levenberg-Marquardt. `points` is parallel to `corrs` and carries the 3D
/// position of each correspondence. Duplicate sampled indices fold their
/// weights together; zero-weight entries are skipped entirely, so a sampled
/// set padded with zero-support indices optimizes the identical objective.
/// Correspondences that stop projecting during iteration contribute nothing
/// for that iteration. Throws RankDeficient when the damped normal equations
/// stay singular up to the damping limit.
[[nodiscard]] RefineResult refine_pose(const Pose& T0,
                                       std::span<const Correspondence> corrs,
                                       std::span<const Eigen::Vector3d> points,
                                       std::span<const double> supports,
                                       const CameraIntrinsics& intrinsics,
                                       std::span<const int> sampled,
                                       const RefineOptions& opts = {});

/// The comparison baseline: uniform sampling of k indices without
/// replacement and unit weight for every residual. Identical machinery to
/// refine_pose otherwise.
[[nodiscard]] RefineResult refine_uniform_baseline(
    const Pose& T0, std::span<const Correspondence> corrs,
    std::span<const Eigen::Vector3d> points,
    const CameraIntrinsics& intrinsics, int k, std::uint64_t seed,
    const RefineOptions& opts = {});

}  // namespace supcal

#endif  // SUPCAL_REFINE_HPP
