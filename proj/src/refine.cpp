#include "supcal/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

#include "supcal/errors.hpp"
#include "supcal/rng.hpp"

namespace supcal {

namespace {

// Damping beyond this cannot repair the normal equations: a zero diagonal
// entry stays zero at any lambda.
constexpr double kDampingLimit = 1e12;

struct WeightedPoint {
  Eigen::Vector3d p;
  Eigen::Vector2d target;  // matched image location
  double w;
};

struct Evaluation {
  double cost = 0.0;
  int active = 0;
};

double robust_cost(double r2, double huber_delta) {
  if (huber_delta <= 0.0) {
    return r2;
  }
  const double rn = std::sqrt(r2);
  if (rn <= huber_delta) {
    return r2;
  }
  return 2.0 * huber_delta * rn - huber_delta * huber_delta;
}

Evaluation evaluate(const CameraIntrinsics& intr, const Pose& pose,
                    const std::vector<WeightedPoint>& pts,
                    double huber_delta) {
  Evaluation ev;
  for (const auto& wp : pts) {
    const Eigen::Vector3d q = transform_point(pose, wp.p);
    if (q.z() <= kMinDepth) {
      continue;
    }
    const Eigen::Vector2d proj(intr.fx * q.x() / q.z() + intr.cx,
                               intr.fy * q.y() / q.z() + intr.cy);
    const double r2 = (proj - wp.target).squaredNorm();
    ev.cost += wp.w * robust_cost(r2, huber_delta);
    ++ev.active;
  }
  return ev;
}

void linearize(const CameraIntrinsics& intr, const Pose& pose,
               const std::vector<WeightedPoint>& pts, double huber_delta,
               Eigen::Matrix<double, 6, 6>& H, Eigen::Matrix<double, 6, 1>& g) {
  H.setZero();
  g.setZero();
  for (const auto& wp : pts) {
    const Eigen::Vector3d q = transform_point(pose, wp.p);
    if (q.z() <= kMinDepth) {
      continue;
    }
    const Eigen::Vector2d proj(intr.fx * q.x() / q.z() + intr.cx,
                               intr.fy * q.y() / q.z() + intr.cy);
    const Eigen::Vector2d r = proj - wp.target;
    const Eigen::Matrix<double, 2, 6> J = *projection_jacobian_at(intr, q);
    double w = wp.w;
    if (huber_delta > 0.0) {
      const double rn = r.norm();
      if (rn > huber_delta) {
        w *= huber_delta / rn;
      }
    }
    H.noalias() += w * J.transpose() * J;
    g.noalias() += w * J.transpose() * r;
  }
}

}  // namespace

Eigen::VectorXd support_distribution(std::span<const double> supports) {
  if (supports.empty()) {
    throw DegenerateSupport("support_distribution: no support values");
  }
  Eigen::VectorXd p(static_cast<Eigen::Index>(supports.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const double s = supports[i];
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument(
          "support_distribution: supports must be finite and nonnegative");
    }
    p[static_cast<Eigen::Index>(i)] = s;
    total += s;
  }
  if (!(total > 0.0)) {
    throw DegenerateSupport(
        "support_distribution: every support value is zero");
  }
  p /= total;
  // One renormalization pass pulls the sum to 1 within an ulp even for very
  // long vectors.
  p /= p.sum();
  return p;
}

std::vector<int> sgis_sample(const Eigen::VectorXd& p,
                             const SamplingPlan& plan) {
  const int n = static_cast<int>(p.size());
  if (n == 0) {
    throw DegenerateSupport("sgis_sample: empty distribution");
  }
  if (plan.k < 1) {
    throw std::invalid_argument("sgis_sample: k must be >= 1");
  }
  std::vector<double> w(p.data(), p.data() + n);
  double total = 0.0;
  int nonzero = 0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("sgis_sample: invalid probability");
    }
    total += v;
    if (v > 0.0) {
      ++nonzero;
    }
  }
  if (!(total > 0.0)) {
    throw DegenerateSupport("sgis_sample: every probability is zero");
  }
  if (!plan.with_replacement && plan.k > nonzero) {
    throw InsufficientPopulation(
        "sgis_sample: requested " + std::to_string(plan.k) +
        " draws without replacement from " + std::to_string(nonzero) +
        " nonzero-probability indices");
  }

  Rng rng(plan.seed);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(plan.k));
  for (int draw = 0; draw < plan.k; ++draw) {
    const double x = rng.uniform01() * total;
    double running = 0.0;
    int picked = -1;
    for (int i = 0; i < n; ++i) {
      if (w[i] <= 0.0) {
        continue;
      }
      running += w[i];
      picked = i;
      if (x < running) {
        break;
      }
    }
    // picked falls through to the last positive-weight index when rounding
    // pushes x past the running total.
    out.push_back(picked);
    if (!plan.with_replacement) {
      total -= w[picked];
      w[picked] = 0.0;
    }
  }
  return out;
}

RefineResult refine_pose(const Pose& T0, std::span<const Correspondence> corrs,
                         std::span<const Eigen::Vector3d> points,
                         std::span<const double> supports,
                         const CameraIntrinsics& intrinsics,
                         std::span<const int> sampled,
                         const RefineOptions& opts) {
  if (corrs.size() != points.size() || corrs.size() != supports.size()) {
    throw LengthMismatch(
        "refine_pose: corrs, points, and supports must be parallel");
  }
  if (sampled.empty()) {
    throw EmptyInput("refine_pose: empty sampled index set");
  }
  if (opts.max_iterations < 1 || !(opts.cost_tolerance > 0.0) ||
      !(opts.step_tolerance > 0.0) || !(opts.initial_damping > 0.0) ||
      !(opts.damping_up > 1.0) || !(opts.damping_down > 0.0) ||
      !(opts.damping_down < 1.0)) {
    throw std::invalid_argument("refine_pose: invalid options");
  }

  // Fold duplicate indices into accumulated weights; drop zero weights so a
  // zero-support correspondence never influences any floating-point sum.
  std::map<int, double> folded;
  for (int idx : sampled) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= corrs.size()) {
      throw std::out_of_range("refine_pose: sampled index out of range");
    }
    const double s = supports[static_cast<std::size_t>(idx)];
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument(
          "refine_pose: supports must be finite and nonnegative");
    }
    folded[idx] += s;
  }
  std::vector<WeightedPoint> pts;
  pts.reserve(folded.size());
  for (const auto& [idx, w] : folded) {
    if (w == 0.0) {
      continue;
    }
    const auto& corr = corrs[static_cast<std::size_t>(idx)];
    pts.push_back({points[static_cast<std::size_t>(idx)],
                   {corr.u_matched.u, corr.u_matched.v},
                   w});
  }
  if (pts.empty()) {
    throw DegenerateSupport("refine_pose: every sampled support is zero");
  }

  RefineResult result;
  result.delta = Pose{};
  Pose current = T0;

  Evaluation ev = evaluate(intrinsics, current, pts, opts.huber_delta);
  if (ev.active == 0) {
    throw NoVisiblePoints(
        "refine_pose: no sampled point projects under the initial estimate");
  }
  double cost = ev.cost;
  result.initial_cost = cost;
  result.cost_trace.push_back(cost);

  Eigen::Matrix<double, 6, 6> H;
  Eigen::Matrix<double, 6, 1> g;
  linearize(intrinsics, current, pts, opts.huber_delta, H, g);

  double lambda = opts.initial_damping;
  while (result.iterations < opts.max_iterations && !result.converged) {
    ++result.iterations;

    Eigen::Matrix<double, 6, 1> step;
    while (true) {
      Eigen::Matrix<double, 6, 6> damped = H;
      damped.diagonal() += lambda * H.diagonal();
      Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(damped);
      if (lu.isInvertible()) {
        step = lu.solve(-g);
        break;
      }
      lambda *= opts.damping_up;
      if (lambda > kDampingLimit) {
        throw RankDeficient(
            "refine_pose: normal equations singular beyond damping repair");
      }
    }

    if (step.norm() <= opts.step_tolerance) {
      result.converged = true;
      break;
    }

    const Twist xi{step.head<3>(), step.tail<3>()};
    const Pose delta_cand = compose(se3_exp(xi), result.delta);
    const Pose cand = compose(delta_cand, T0);
    const Evaluation cand_ev = evaluate(intrinsics, cand, pts, opts.huber_delta);

    if (cand_ev.active > 0 && cand_ev.cost < cost) {
      const double decrease = cost - cand_ev.cost;
      result.delta = delta_cand;
      current = cand;
      cost = cand_ev.cost;
      result.cost_trace.push_back(cost);
      lambda *= opts.damping_down;
      if (cost == 0.0 || decrease <= opts.cost_tolerance * result.cost_trace[result.cost_trace.size() - 2]) {
        result.converged = true;
      } else {
        linearize(intrinsics, current, pts, opts.huber_delta, H, g);
      }
    } else {
      lambda *= opts.damping_up;
      if (lambda > kDampingLimit) {
        break;  // no improving step exists at any damping; report unconverged
      }
    }
  }

  result.refined = current;
  result.final_cost = cost;
  return result;
}

RefineResult refine_uniform_baseline(const Pose& T0,
                                     std::span<const Correspondence> corrs,
                                     std::span<const Eigen::Vector3d> points,
                                     const CameraIntrinsics& intrinsics, int k,
                                     std::uint64_t seed,
                                     const RefineOptions& opts) {
  if (corrs.empty()) {
    throw EmptyInput("refine_uniform_baseline: no correspondences");
  }
  const int n = static_cast<int>(corrs.size());
  const Eigen::VectorXd p =
      Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const SamplingPlan plan{std::min(k, n), false, seed};
  const std::vector<int> sampled = sgis_sample(p, plan);
  const std::vector<double> ones(corrs.size(), 1.0);
  return refine_pose(T0, corrs, points, ones, intrinsics, sampled, opts);
}

}  // namespace supcal
