#ifndef SUPCAL_ANALYSIS_HPP
#define SUPCAL_ANALYSIS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "supcal/refine.hpp"
#include "supcal/scene_sim.hpp"
#include "supcal/support_map.hpp"

namespace supcal {

/// Median of the values; even-sized samples average the two central order
/// statistics. Throws EmptyInput.
[[nodiscard]] double median(std::vector<double> values);

[[nodiscard]] double mean(std::span<const double> values);

/// Population standard deviation (divides by n, not n - 1).
[[nodiscard]] double population_std(std::span<const double> values);

/// Residual statistics of one semantic class. The summary value is the
/// median of the per-correspondence residual norms; above_average compares
/// it against the unweighted mean of all class summaries.
struct ClassResidualStats {
  int class_id = 0;
  std::int64_t count = 0;
  double median_abs_du = 0.0;  // pixels
  double median_abs_dv = 0.0;  // pixels
  double mean_abs_du = 0.0;    // pixels
  double mean_abs_dv = 0.0;    // pixels
  double summary = 0.0;        // pixels
  bool above_average = false;
};

/// Groups correspondences by class and ranks classes by residual magnitude.
/// Output is sorted by class_id. Throws EmptyInput.
[[nodiscard]] std::vector<ClassResidualStats> class_stats(
    std::span<const Correspondence> corrs);

/// Calibration errors of one evaluation run.
struct RunErrors {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

struct MetricAggregate {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // population std over runs
};

/// Paired comparison of two refinement variants over the same runs. Wins
/// count strict inequalities per metric; improvements are relative,
/// (value_a - value_b) / value_a, positive when variant b is better, zero
/// when value_a is zero.
struct VariantComparison {
  std::vector<RunErrors> runs_a;
  std::vector<RunErrors> runs_b;
  MetricAggregate translation_a, translation_b;
  MetricAggregate rotation_a, rotation_b;
  int translation_wins_a = 0;
  int translation_wins_b = 0;
  int rotation_wins_a = 0;
  int rotation_wins_b = 0;
  double translation_mean_improvement = 0.0;
  double translation_median_improvement = 0.0;
  double rotation_mean_improvement = 0.0;
  double rotation_median_improvement = 0.0;
};

/// Aggregates per-run errors of two variants run on identical inputs.
/// Throws EmptyInput and LengthMismatch.
[[nodiscard]] VariantComparison compare_variants(
    std::span<const RunErrors> runs_a, std::span<const RunErrors> runs_b);

/// The multi-run evaluation protocol: variant a is the uniform-sampling
/// baseline, variant b is support-guided importance sampling against `map`.
struct EvaluationProtocol {
  SceneSpec scene;
  PerturbationSpec perturbation;  // magnitudes; per-run seeds are derived
  SamplingPlan sampling;          // k and replacement; per-run seeds derived
  RefineOptions refine;
  int n_runs = 10;
  std::uint64_t base_seed = 0;
  // Classical importance-sampling correction: divide each weight by k * p_i
  // instead of weighting by raw support (ablation switch).
  bool divide_by_probability = false;
};

/// Runs n_runs paired evaluations: each run perturbs the reference
/// extrinsics, simulates matcher residuals once, and refines with both
/// variants on that identical correspondence set. Deterministic per
/// base_seed.
[[nodiscard]] VariantComparison run_paired_evaluation(
    const EvaluationProtocol& protocol, const SupportMap& map);

}  // namespace supcal

#endif  // SUPCAL_ANALYSIS_HPP
