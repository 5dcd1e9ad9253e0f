#include "supcal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "supcal/errors.hpp"
#include "supcal/rng.hpp"

namespace supcal {

double median(std::vector<double> values) {
  if (values.empty()) {
    throw EmptyInput("median: no values");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) {
    return values[n / 2];
  }
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(std::span<const double> values) {
  if (values.empty()) {
    throw EmptyInput("mean: no values");
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  return sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) {
    acc += (v - m) * (v - m);
  }
  return std::sqrt(acc / static_cast<double>(values.size()));
}

std::vector<ClassResidualStats> class_stats(
    std::span<const Correspondence> corrs) {
  if (corrs.empty()) {
    throw EmptyInput("class_stats: no correspondences");
  }

  struct Samples {
    std::vector<double> abs_du, abs_dv, norms;
  };
  std::map<int, Samples> groups;
  for (const auto& corr : corrs) {
    auto& g = groups[corr.class_id];
    g.abs_du.push_back(std::abs(corr.f.x()));
    g.abs_dv.push_back(std::abs(corr.f.y()));
    g.norms.push_back(corr.f.norm());
  }

  std::vector<ClassResidualStats> stats;
  stats.reserve(groups.size());
  for (auto& [class_id, g] : groups) {
    ClassResidualStats s;
    s.class_id = class_id;
    s.count = static_cast<std::int64_t>(g.norms.size());
    s.median_abs_du = median(g.abs_du);
    s.median_abs_dv = median(g.abs_dv);
    s.mean_abs_du = mean(g.abs_du);
    s.mean_abs_dv = mean(g.abs_dv);
    s.summary = median(std::move(g.norms));
    stats.push_back(s);
  }

  std::vector<double> summaries;
  summaries.reserve(stats.size());
  for (const auto& s : stats) {
    summaries.push_back(s.summary);
  }
  const double threshold = mean(summaries);
  for (auto& s : stats) {
    s.above_average = s.summary > threshold;
  }
  return stats;
}

namespace {

MetricAggregate aggregate(std::vector<double> values) {
  MetricAggregate agg;
  agg.mean = mean(values);
  agg.stddev = population_std(values);
  agg.median = median(std::move(values));
  return agg;
}

// Relative improvement of b over a; zero when there is nothing to improve.
double improvement(double a, double b) { return a == 0.0 ? 0.0 : (a - b) / a; }

}  // namespace

VariantComparison compare_variants(std::span<const RunErrors> runs_a,
                                   std::span<const RunErrors> runs_b) {
  if (runs_a.empty() || runs_b.empty()) {
    throw EmptyInput("compare_variants: no runs");
  }
  if (runs_a.size() != runs_b.size()) {
    throw LengthMismatch("compare_variants: variants have different run counts");
  }

  VariantComparison cmp;
  cmp.runs_a.assign(runs_a.begin(), runs_a.end());
  cmp.runs_b.assign(runs_b.begin(), runs_b.end());

  std::vector<double> ta, ra, tb, rb;
  for (std::size_t i = 0; i < runs_a.size(); ++i) {
    ta.push_back(runs_a[i].translation_m);
    ra.push_back(runs_a[i].rotation_deg);
    tb.push_back(runs_b[i].translation_m);
    rb.push_back(runs_b[i].rotation_deg);

    if (runs_b[i].translation_m < runs_a[i].translation_m) {
      ++cmp.translation_wins_b;
    } else if (runs_a[i].translation_m < runs_b[i].translation_m) {
      ++cmp.translation_wins_a;
    }
    if (runs_b[i].rotation_deg < runs_a[i].rotation_deg) {
      ++cmp.rotation_wins_b;
    } else if (runs_a[i].rotation_deg < runs_b[i].rotation_deg) {
      ++cmp.rotation_wins_a;
    }
  }
  cmp.translation_a = aggregate(std::move(ta));
  cmp.translation_b = aggregate(std::move(tb));
  cmp.rotation_a = aggregate(std::move(ra));
  cmp.rotation_b = aggregate(std::move(rb));

  cmp.translation_mean_improvement =
      improvement(cmp.translation_a.mean, cmp.translation_b.mean);
  cmp.translation_median_improvement =
      improvement(cmp.translation_a.median, cmp.translation_b.median);
  cmp.rotation_mean_improvement =
      improvement(cmp.rotation_a.mean, cmp.rotation_b.mean);
  cmp.rotation_median_improvement =
      improvement(cmp.rotation_a.median, cmp.rotation_b.median);
  return cmp;
}

VariantComparison run_paired_evaluation(const EvaluationProtocol& protocol,
                                        const SupportMap& map) {
  if (protocol.n_runs < 1) {
    throw std::invalid_argument("run_paired_evaluation: n_runs must be >= 1");
  }
  const Scene scene = generate_scene(protocol.scene, protocol.base_seed);
  const Pose& reference = scene.reference_extrinsics;

  std::vector<RunErrors> runs_a, runs_b;
  runs_a.reserve(static_cast<std::size_t>(protocol.n_runs));
  runs_b.reserve(static_cast<std::size_t>(protocol.n_runs));

  for (int run = 0; run < protocol.n_runs; ++run) {
    const auto run_index = static_cast<std::uint64_t>(run);
    PerturbationSpec perturbation = protocol.perturbation;
    perturbation.seed =
        derive_seed(protocol.base_seed, streams::kPerturb, run_index);
    const Pose T0 = perturb_pose(reference, perturbation);

    const std::vector<Correspondence> corrs = oracle_residuals(
        scene, T0,
        derive_seed(protocol.base_seed, streams::kRunOracle, run_index));
    const std::vector<Eigen::Vector3d> points =
        correspondence_points(scene, corrs);
    const int n = static_cast<int>(corrs.size());
    const int k = std::min(protocol.sampling.k, n);

    const RefineResult res_a = refine_uniform_baseline(
        T0, corrs, points, scene.intrinsics, k,
        derive_seed(protocol.base_seed, streams::kUniformSample, run_index),
        protocol.refine);

    std::vector<double> supports(corrs.size());
    for (std::size_t i = 0; i < corrs.size(); ++i) {
      supports[i] = map.lookup(corrs[i].u);
    }
    const Eigen::VectorXd p = support_distribution(supports);
    const SamplingPlan plan{
        k, protocol.sampling.with_replacement,
        derive_seed(protocol.base_seed, streams::kSgisSample, run_index)};
    const std::vector<int> sampled = sgis_sample(p, plan);
    std::vector<double> weights = supports;
    if (protocol.divide_by_probability) {
      for (std::size_t i = 0; i < weights.size(); ++i) {
        const double pi = p[static_cast<Eigen::Index>(i)];
        weights[i] = pi > 0.0 ? supports[i] / (static_cast<double>(k) * pi) : 0.0;
      }
    }
    const RefineResult res_b = refine_pose(T0, corrs, points, weights,
                                           scene.intrinsics, sampled,
                                           protocol.refine);

    const PoseError err_a = pose_error(res_a.refined, reference);
    const PoseError err_b = pose_error(res_b.refined, reference);
    runs_a.push_back({err_a.translation, err_a.rotation_deg});
    runs_b.push_back({err_b.translation, err_b.rotation_deg});
  }
  return compare_variants(runs_a, runs_b);
}

}  // namespace supcal
