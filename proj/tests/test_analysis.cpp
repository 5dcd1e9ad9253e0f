#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "supcal/analysis.hpp"
#include "supcal/errors.hpp"
#include "supcal/rng.hpp"

using namespace supcal;

namespace {

CameraIntrinsics test_camera() {
  return CameraIntrinsics{500.0, 500.0, 320.0, 240.0, 640, 480};
}

Correspondence corr_with(int class_id, double du, double dv) {
  Correspondence corr;
  corr.class_id = class_id;
  corr.f = {du, dv};
  return corr;
}

std::vector<RunErrors> runs_from_translation(std::vector<double> values) {
  std::vector<RunErrors> runs;
  for (double v : values) runs.push_back({v, v * 10.0});
  return runs;
}

}  // namespace

TEST_CASE("median handles odd, even, and single samples") {
  CHECK(median({1.0, 2.0, 3.0}) == 2.0);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({1.0, 2.0, 3.0, 4.0}) == 2.5);
  CHECK(median({5.0}) == 5.0);
  CHECK_THROWS_AS((void)median({}), EmptyInput);
}

TEST_CASE("median shrugs off a massive outlier") {
  std::vector<double> values(5001, 1.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(i % 100);
  }
  const double clean = median(values);
  values[17] = 1e12;
  // Replacing one sample can move the median at most one rank.
  CHECK(std::abs(median(values) - clean) <= 1.0);
}

TEST_CASE("mean and population_std on a known sample") {
  const std::vector<double> values{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(values) == 2.5);
  CHECK(population_std(values) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(population_std(std::vector<double>{7.0}) == 0.0);
}

TEST_CASE("class_stats computes per-class medians and means") {
  std::vector<Correspondence> corrs{
      corr_with(0, 1.0, 2.0),
      corr_with(0, -3.0, 4.0),
  };
  const auto stats = class_stats(corrs);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].class_id == 0);
  CHECK(stats[0].count == 2);
  CHECK(stats[0].median_abs_du == 2.0);   // |1|, |-3|
  CHECK(stats[0].median_abs_dv == 3.0);   // |2|, |4|
  CHECK(stats[0].mean_abs_du == 2.0);
  CHECK(stats[0].mean_abs_dv == 3.0);
  CHECK(stats[0].summary ==
        doctest::Approx(0.5 * (std::sqrt(5.0) + 5.0)).epsilon(1e-15));
}

TEST_CASE("class_stats flags classes above the average summary") {
  std::vector<Correspondence> corrs{
      corr_with(0, 1.0, 0.0), corr_with(0, 1.0, 0.0),
      corr_with(1, 3.0, 0.0), corr_with(1, 3.0, 0.0),
  };
  const auto stats = class_stats(corrs);
  REQUIRE(stats.size() == 2);
  // Summaries are 1 and 3; the threshold is their unweighted mean, 2.
  CHECK(stats[0].summary == 1.0);
  CHECK(stats[1].summary == 3.0);
  CHECK_FALSE(stats[0].above_average);
  CHECK(stats[1].above_average);
}

TEST_CASE("class_stats is sorted by class id and permutation invariant") {
  Rng rng(701);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 300; ++i) {
    corrs.push_back(corr_with(static_cast<int>(rng.uniform(0.0, 3.0)),
                              rng.normal() * 2.0, rng.normal() * 2.0));
  }
  const auto sorted_stats = class_stats(corrs);
  REQUIRE(sorted_stats.size() == 3);
  CHECK(sorted_stats[0].class_id < sorted_stats[1].class_id);
  CHECK(sorted_stats[1].class_id < sorted_stats[2].class_id);

  std::mt19937 shuffler(7);
  std::shuffle(corrs.begin(), corrs.end(), shuffler);
  const auto shuffled_stats = class_stats(corrs);
  REQUIRE(shuffled_stats.size() == sorted_stats.size());
  for (std::size_t i = 0; i < sorted_stats.size(); ++i) {
    CHECK(shuffled_stats[i].class_id == sorted_stats[i].class_id);
    CHECK(shuffled_stats[i].count == sorted_stats[i].count);
    CHECK(shuffled_stats[i].summary == sorted_stats[i].summary);
    CHECK(shuffled_stats[i].above_average == sorted_stats[i].above_average);
  }
}

TEST_CASE("class_stats rejects empty input") {
  CHECK_THROWS_AS((void)class_stats(std::vector<Correspondence>{}), EmptyInput);
}

TEST_CASE("class_stats separates a noisy class from a clean one") {
  Rng rng(702);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 5000; ++i) {
    corrs.push_back(corr_with(0, rng.normal() * 1.0, rng.normal() * 1.0));
    corrs.push_back(corr_with(1, rng.normal() * 6.0, rng.normal() * 6.0));
  }
  const auto stats = class_stats(corrs);
  REQUIRE(stats.size() == 2);
  CHECK_FALSE(stats[0].above_average);
  CHECK(stats[1].above_average);
  CHECK(stats[1].summary > 4.0 * stats[0].summary);
}

TEST_CASE("compare_variants on identical runs reports all ties") {
  const auto runs = runs_from_translation({0.1, 0.2, 0.3});
  const VariantComparison cmp = compare_variants(runs, runs);
  CHECK(cmp.translation_wins_a == 0);
  CHECK(cmp.translation_wins_b == 0);
  CHECK(cmp.rotation_wins_a == 0);
  CHECK(cmp.rotation_wins_b == 0);
  CHECK(cmp.translation_mean_improvement == 0.0);
  CHECK(cmp.translation_median_improvement == 0.0);
  CHECK(cmp.translation_a.mean == cmp.translation_b.mean);
}

TEST_CASE("compare_variants aggregates take the documented percent values") {
  const auto runs_a = runs_from_translation({0.29, 0.3281, 0.3332});
  const auto runs_b = runs_from_translation({0.22, 0.2816, 0.2829});
  const VariantComparison cmp = compare_variants(runs_a, runs_b);

  CHECK(cmp.translation_a.mean == doctest::Approx(0.3171).epsilon(1e-12));
  CHECK(cmp.translation_a.median == 0.3281);
  CHECK(cmp.translation_b.mean == doctest::Approx(0.2615).epsilon(1e-12));
  CHECK(cmp.translation_b.median == 0.2816);

  // Mean 0.3171 -> 0.2615 is a 17.5% drop; median 0.3281 -> 0.2816 is 14.2%.
  CHECK(std::abs(cmp.translation_mean_improvement * 100.0 - 17.5) < 0.1);
  CHECK(std::abs(cmp.translation_median_improvement * 100.0 - 14.2) < 0.1);
  CHECK(cmp.translation_wins_b == 3);
  CHECK(cmp.translation_wins_a == 0);
}

TEST_CASE("compare_variants counts strict wins on both sides") {
  std::vector<RunErrors> runs_a{{0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0}};
  std::vector<RunErrors> runs_b{{0.2, 1.0}, {0.1, 2.0}, {0.3, 1.0}};
  const VariantComparison cmp = compare_variants(runs_a, runs_b);
  CHECK(cmp.translation_wins_a == 1);  // run 0
  CHECK(cmp.translation_wins_b == 1);  // run 1
  CHECK(cmp.rotation_wins_a == 0);
  CHECK(cmp.rotation_wins_b == 1);  // run 2
}

TEST_CASE("swapping the variants mirrors wins and flips improvement signs") {
  Rng rng(703);
  std::vector<RunErrors> runs_a, runs_b;
  for (int i = 0; i < 10; ++i) {
    runs_a.push_back({rng.uniform(0.05, 0.4), rng.uniform(0.5, 4.0)});
    runs_b.push_back({rng.uniform(0.05, 0.4), rng.uniform(0.5, 4.0)});
  }
  const VariantComparison fwd = compare_variants(runs_a, runs_b);
  const VariantComparison rev = compare_variants(runs_b, runs_a);
  CHECK(fwd.translation_wins_a == rev.translation_wins_b);
  CHECK(fwd.translation_wins_b == rev.translation_wins_a);
  CHECK(fwd.rotation_wins_a == rev.rotation_wins_b);
  CHECK(fwd.translation_a.mean == rev.translation_b.mean);
  CHECK(fwd.translation_a.median == rev.translation_b.median);
  CHECK(fwd.translation_a.stddev == rev.translation_b.stddev);
  // The relative improvement is normalized by the first variant, so the
  // reversed value has the opposite sign (not the same magnitude).
  CHECK((fwd.translation_mean_improvement > 0.0) ==
        (rev.translation_mean_improvement < 0.0));
  CHECK((fwd.rotation_mean_improvement > 0.0) ==
        (rev.rotation_mean_improvement < 0.0));
}

TEST_CASE("compare_variants validates its input") {
  const auto runs = runs_from_translation({0.1, 0.2});
  CHECK_THROWS_AS(
      (void)compare_variants(std::vector<RunErrors>{}, std::vector<RunErrors>{}),
      EmptyInput);
  CHECK_THROWS_AS(
      (void)compare_variants(runs, runs_from_translation({0.1})),
      LengthMismatch);
}

TEST_CASE("a zero-improvement baseline divides to zero, not NaN") {
  std::vector<RunErrors> zeros{{0.0, 0.0}, {0.0, 0.0}};
  const VariantComparison cmp = compare_variants(zeros, zeros);
  CHECK(cmp.translation_mean_improvement == 0.0);
  CHECK(cmp.rotation_median_improvement == 0.0);
}

namespace {

EvaluationProtocol clean_protocol() {
  EvaluationProtocol protocol;
  protocol.scene.intrinsics = test_camera();
  ClassLayout layout;
  layout.semantic.id = 0;
  layout.semantic.name = "points";
  layout.count = 150;
  layout.extent_min = {-2.0, -1.5, 5.0};
  layout.extent_max = {2.0, 1.5, 15.0};
  protocol.scene.classes.push_back(layout);
  protocol.sampling.k = 100;
  protocol.n_runs = 3;
  protocol.base_seed = 99;
  return protocol;
}

SupportMap reference_frame_map(const SceneSpec& spec, std::uint64_t base_seed,
                               int n_frames, double sigma, double tau) {
  const Scene scene = generate_scene(spec, base_seed);
  SupportMap map(spec.intrinsics.width, spec.intrinsics.height, 4, sigma, tau);
  for (int frame = 0; frame < n_frames; ++frame) {
    const auto corrs = oracle_residuals(
        scene, scene.reference_extrinsics,
        derive_seed(base_seed, streams::kFrameOracle,
                    static_cast<std::uint64_t>(frame)));
    const auto samples = score_correspondences(corrs, tau);
    map.accumulate(samples);
  }
  map.normalize();
  return map;
}

}  // namespace

TEST_CASE("a noiseless unperturbed evaluation lands exactly on the reference") {
  const EvaluationProtocol protocol = clean_protocol();
  const SupportMap map =
      reference_frame_map(protocol.scene, protocol.base_seed, 5, 8.0, 2.0);
  const VariantComparison cmp = run_paired_evaluation(protocol, map);
  REQUIRE(cmp.runs_a.size() == 3);
  REQUIRE(cmp.runs_b.size() == 3);
  for (const auto& run : cmp.runs_a) {
    CHECK(run.translation_m == 0.0);
    CHECK(run.rotation_deg == 0.0);
  }
  for (const auto& run : cmp.runs_b) {
    CHECK(run.translation_m == 0.0);
    CHECK(run.rotation_deg == 0.0);
  }
  CHECK(cmp.translation_wins_a == 0);
  CHECK(cmp.translation_wins_b == 0);
  CHECK(cmp.translation_mean_improvement == 0.0);
}

TEST_CASE("run_paired_evaluation is deterministic in the base seed") {
  EvaluationProtocol protocol = clean_protocol();
  protocol.scene.classes[0].semantic.residual_sigma = 2.0;
  protocol.scene.classes[0].semantic.outlier_sigma = 2.0;
  protocol.perturbation.translation_magnitude = 0.1;
  protocol.perturbation.rotation_magnitude_deg = 2.0;
  const SupportMap map =
      reference_frame_map(protocol.scene, protocol.base_seed, 5, 8.0, 2.0);

  const VariantComparison first = run_paired_evaluation(protocol, map);
  const VariantComparison second = run_paired_evaluation(protocol, map);
  REQUIRE(first.runs_a.size() == second.runs_a.size());
  for (std::size_t i = 0; i < first.runs_a.size(); ++i) {
    CHECK(first.runs_a[i].translation_m == second.runs_a[i].translation_m);
    CHECK(first.runs_a[i].rotation_deg == second.runs_a[i].rotation_deg);
    CHECK(first.runs_b[i].translation_m == second.runs_b[i].translation_m);
    CHECK(first.runs_b[i].rotation_deg == second.runs_b[i].rotation_deg);
  }

  EvaluationProtocol other = protocol;
  other.base_seed = 100;
  const SupportMap other_map =
      reference_frame_map(other.scene, other.base_seed, 5, 8.0, 2.0);
  const VariantComparison third = run_paired_evaluation(other, other_map);
  bool any_differ = false;
  for (std::size_t i = 0; i < first.runs_a.size(); ++i) {
    if (first.runs_a[i].translation_m != third.runs_a[i].translation_m) {
      any_differ = true;
    }
  }
  CHECK(any_differ);
}

TEST_CASE("guided sampling beats uniform when noise splits by image region") {
  // Trusted points fill the upper image band, a noisy class fills the lower
  // band, far enough apart that kernel smoothing cannot bridge the gap.
  EvaluationProtocol protocol;
  protocol.scene.intrinsics = test_camera();

  ClassLayout rigid;
  rigid.semantic.id = 0;
  rigid.semantic.name = "rigid";
  rigid.semantic.residual_sigma = 0.5;
  rigid.semantic.outlier_sigma = 0.5;
  rigid.count = 200;
  rigid.extent_min = {-2.0, -1.5, 5.0};
  rigid.extent_max = {2.0, -0.5, 15.0};
  protocol.scene.classes.push_back(rigid);

  ClassLayout foliage;
  foliage.semantic.id = 1;
  foliage.semantic.name = "foliage";
  foliage.semantic.residual_sigma = 6.0;
  foliage.semantic.outlier_sigma = 6.0;
  foliage.count = 1000;
  foliage.extent_min = {-2.0, 0.5, 5.0};
  foliage.extent_max = {2.0, 1.5, 15.0};
  protocol.scene.classes.push_back(foliage);

  protocol.perturbation.translation_magnitude = 0.05;
  protocol.perturbation.rotation_magnitude_deg = 1.0;
  protocol.sampling.k = 150;
  protocol.n_runs = 5;
  protocol.base_seed = 7;

  const SupportMap map =
      reference_frame_map(protocol.scene, protocol.base_seed, 10, 6.0, 1.0);
  const VariantComparison cmp = run_paired_evaluation(protocol, map);
  CHECK(cmp.translation_wins_b >= 4);
  CHECK(cmp.translation_mean_improvement > 0.0);
  CHECK(cmp.translation_b.mean < cmp.translation_a.mean);
}
