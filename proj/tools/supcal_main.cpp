#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "supcal/analysis.hpp"
#include "supcal/config.hpp"
#include "supcal/errors.hpp"
#include "supcal/io.hpp"
#include "supcal/refine.hpp"
#include "supcal/rng.hpp"
#include "supcal/scene_sim.hpp"
#include "supcal/support_map.hpp"

namespace fs = std::filesystem;
using namespace supcal;

namespace {

// Exit taxonomy: 0 success, 2 config/usage/IO, 3 degenerate data,
// 4 solver rank deficiency.
constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitRankDeficient = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* config_opt =
      cmd->add_option("--config", args.config_path, "Experiment config (JSON)");
  if (config_required) {
    config_opt->required();
  }
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed, "Override the config's base_seed")
      ->each([&args](const std::string&) { args.seed_given = true; });
}

ExperimentConfig load_effective_config(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed_given) {
    cfg.base_seed = args.seed;
  }
  return cfg;
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoFailure("cannot create output directory: " + out_dir);
  }
}

std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%03d.csv", index);
  return buf;
}

int cmd_simulate(const CommonArgs& args) {
  const ExperimentConfig cfg = load_effective_config(args);
  ensure_out_dir(args.out_dir);
  const fs::path out(args.out_dir);

  const Scene scene = generate_scene(cfg.scene, cfg.base_seed);
  save_scene_points(scene.points, out / "scene.csv");

  PerturbationSpec perturbation = cfg.perturbation;
  perturbation.seed = derive_seed(cfg.base_seed, streams::kPerturb, 0);
  const Pose estimate = perturb_pose(scene.reference_extrinsics, perturbation);

  std::size_t total = 0;
  for (int t = 0; t < cfg.n_frames; ++t) {
    const std::vector<Correspondence> corrs = oracle_residuals(
        scene, estimate,
        derive_seed(cfg.base_seed, streams::kFrameOracle,
                    static_cast<std::uint64_t>(t)));
    save_correspondences(corrs, out / frame_filename(t));
    total += corrs.size();
  }
  std::printf("scene points: %zu\nframes: %d\ncorrespondences: %zu\n",
              scene.points.size(), cfg.n_frames, total);
  return 0;
}

int cmd_build_map(const CommonArgs& args, const std::vector<std::string>& files,
                  bool no_normalize) {
  const ExperimentConfig cfg = load_effective_config(args);
  ensure_out_dir(args.out_dir);
  const fs::path out(args.out_dir);

  SupportMap map(cfg.scene.intrinsics.width, cfg.scene.intrinsics.height,
                 cfg.map.downsample, cfg.map.sigma, cfg.map.tau);
  for (const std::string& file : files) {
    const std::vector<Correspondence> corrs = load_correspondences(file);
    const std::vector<ScoredSample> samples =
        score_correspondences(corrs, cfg.map.tau);
    map.accumulate(samples);
  }
  if (!no_normalize) {
    map.normalize();
  }
  save_map(map, out / "map.smap");
  write_map_image(map, out / "map.pgm");
  std::printf("map: %dx%d cells, max %.6g%s\n", map.cells_x(), map.cells_y(),
              map.grid().maxCoeff(), no_normalize ? " (unnormalized)" : "");
  return 0;
}

int cmd_merge_maps(const CommonArgs& args,
                   const std::vector<std::string>& files) {
  ensure_out_dir(args.out_dir);
  const fs::path out(args.out_dir);

  SupportMap merged = load_map(files[0]);
  for (std::size_t i = 1; i < files.size(); ++i) {
    merged = merge(merged, load_map(files[i]));
  }
  merged.normalize();
  save_map(merged, out / "map.smap");
  write_map_image(merged, out / "map.pgm");
  std::printf("merged %zu maps: %dx%d cells\n", files.size(), merged.cells_x(),
              merged.cells_y());
  return 0;
}

int cmd_analyze(const CommonArgs& args, const std::vector<std::string>& files) {
  ensure_out_dir(args.out_dir);
  const fs::path out(args.out_dir);

  std::vector<Correspondence> corrs;
  for (const std::string& file : files) {
    const std::vector<Correspondence> part = load_correspondences(file);
    corrs.insert(corrs.end(), part.begin(), part.end());
  }
  const std::vector<ClassResidualStats> stats = class_stats(corrs);

  std::string csv = "class,count,med_du,med_dv,summary,above_avg\n";
  for (const auto& s : stats) {
    csv += std::to_string(s.class_id) + "," + std::to_string(s.count) + "," +
           format_double(s.median_abs_du) + "," +
           format_double(s.median_abs_dv) + "," + format_double(s.summary) +
           "," + (s.above_average ? "1" : "0") + "\n";
  }
  write_file_atomic(out / "class_stats.csv", csv);

  std::printf("%-8s %-10s %-12s %-12s %-12s %s\n", "class", "count", "med_du",
              "med_dv", "summary", "above_avg");
  for (const auto& s : stats) {
    std::printf("%-8d %-10lld %-12.6g %-12.6g %-12.6g %s\n", s.class_id,
                static_cast<long long>(s.count), s.median_abs_du,
                s.median_abs_dv, s.summary, s.above_average ? "yes" : "no");
  }
  return 0;
}

int cmd_refine(const CommonArgs& args, const std::string& map_path) {
  const ExperimentConfig cfg = load_effective_config(args);
  ensure_out_dir(args.out_dir);
  const fs::path out(args.out_dir);

  const SupportMap map = load_map(map_path);

  EvaluationProtocol protocol;
  protocol.scene = cfg.scene;
  protocol.perturbation = cfg.perturbation;
  protocol.sampling = cfg.sampling;
  protocol.refine = cfg.refine;
  protocol.n_runs = cfg.n_runs;
  protocol.base_seed = cfg.base_seed;
  protocol.divide_by_probability = cfg.divide_by_probability;
  const VariantComparison cmp = run_paired_evaluation(protocol, map);

  std::string runs_csv = "run,variant,trans_err_m,rot_err_deg\n";
  for (std::size_t r = 0; r < cmp.runs_a.size(); ++r) {
    runs_csv += std::to_string(r) + ",uniform," +
                format_double(cmp.runs_a[r].translation_m) + "," +
                format_double(cmp.runs_a[r].rotation_deg) + "\n";
    runs_csv += std::to_string(r) + ",sgis," +
                format_double(cmp.runs_b[r].translation_m) + "," +
                format_double(cmp.runs_b[r].rotation_deg) + "\n";
  }
  write_file_atomic(out / "runs.csv", runs_csv);

  const auto aggregate_row = [](const std::string& metric,
                                const MetricAggregate& a,
                                const MetricAggregate& b, int wins_a,
                                int wins_b, double mean_improvement,
                                double median_improvement) {
    return metric + "," + format_double(a.mean) + "," + format_double(b.mean) +
           "," + format_double(a.median) + "," + format_double(b.median) +
           "," + format_double(a.stddev) + "," + format_double(b.stddev) +
           "," + std::to_string(wins_a) + "," + std::to_string(wins_b) + "," +
           format_double(mean_improvement) + "," +
           format_double(median_improvement) + "\n";
  };
  std::string agg_csv =
      "metric,mean_uniform,mean_sgis,median_uniform,median_sgis,"
      "std_uniform,std_sgis,wins_uniform,wins_sgis,"
      "mean_improvement,median_improvement\n";
  agg_csv += aggregate_row("trans_err_m", cmp.translation_a, cmp.translation_b,
                           cmp.translation_wins_a, cmp.translation_wins_b,
                           cmp.translation_mean_improvement,
                           cmp.translation_median_improvement);
  agg_csv += aggregate_row("rot_err_deg", cmp.rotation_a, cmp.rotation_b,
                           cmp.rotation_wins_a, cmp.rotation_wins_b,
                           cmp.rotation_mean_improvement,
                           cmp.rotation_median_improvement);
  write_file_atomic(out / "aggregates.csv", agg_csv);

  const int runs = static_cast<int>(cmp.runs_a.size());
  std::printf("%d paired runs, uniform vs sgis\n", runs);
  std::printf("%-14s %12s %12s %12s %12s %12s %12s %6s\n", "metric", "mean_u",
              "mean_s", "median_u", "median_s", "std_u", "std_s", "wins");
  std::printf("%-14s %12.6g %12.6g %12.6g %12.6g %12.6g %12.6g %3d/%d\n",
              "trans_err_m", cmp.translation_a.mean, cmp.translation_b.mean,
              cmp.translation_a.median, cmp.translation_b.median,
              cmp.translation_a.stddev, cmp.translation_b.stddev,
              cmp.translation_wins_b, runs);
  std::printf("%-14s %12.6g %12.6g %12.6g %12.6g %12.6g %12.6g %3d/%d\n",
              "rot_err_deg", cmp.rotation_a.mean, cmp.rotation_b.mean,
              cmp.rotation_a.median, cmp.rotation_b.median,
              cmp.rotation_a.stddev, cmp.rotation_b.stddev, cmp.rotation_wins_b,
              runs);
  std::printf("translation improvement: mean %.2f%%, median %.2f%%\n",
              100.0 * cmp.translation_mean_improvement,
              100.0 * cmp.translation_median_improvement);
  std::printf("rotation improvement: mean %.2f%%, median %.2f%%\n",
              100.0 * cmp.rotation_mean_improvement,
              100.0 * cmp.rotation_median_improvement);
  return 0;
}

int classify_error(const std::exception& e) {
  if (dynamic_cast<const RankDeficient*>(&e) != nullptr) {
    return kExitRankDeficient;
  }
  if (dynamic_cast<const AllZeroMap*>(&e) != nullptr ||
      dynamic_cast<const DegenerateSupport*>(&e) != nullptr ||
      dynamic_cast<const NoVisiblePoints*>(&e) != nullptr ||
      dynamic_cast<const EmptyInput*>(&e) != nullptr ||
      dynamic_cast<const InsufficientPopulation*>(&e) != nullptr) {
    return kExitDegenerate;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Support-map-driven LiDAR-camera extrinsic calibration toolkit"};
  app.require_subcommand(1);

  CommonArgs sim_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a scene and per-frame matcher residuals");
  add_common(simulate, sim_args, true);

  CommonArgs build_args;
  std::vector<std::string> build_files;
  bool no_normalize = false;
  CLI::App* build = app.add_subcommand(
      "build-map", "Accumulate correspondence files into a support map");
  add_common(build, build_args, true);
  build->add_option("files", build_files, "Correspondence CSV files")
      ->required();
  build->add_flag("--no-normalize", no_normalize,
                  "Keep the map unnormalized (for later merging)");

  CommonArgs merge_args;
  std::vector<std::string> merge_files;
  CLI::App* merge_cmd = app.add_subcommand(
      "merge-maps", "Sum unnormalized partial maps and normalize the result");
  add_common(merge_cmd, merge_args, false);
  merge_cmd->add_option("files", merge_files, "Partial map files")->required();

  CommonArgs analyze_args;
  std::vector<std::string> analyze_files;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Per-class residual statistics from correspondence files");
  add_common(analyze, analyze_args, false);
  analyze->add_option("files", analyze_files, "Correspondence CSV files")
      ->required();

  CommonArgs refine_args;
  std::string map_path;
  CLI::App* refine_cmd = app.add_subcommand(
      "refine", "Paired uniform-vs-support-guided refinement evaluation");
  add_common(refine_cmd, refine_args, true);
  refine_cmd->add_option("--map", map_path, "Support map file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(sim_args);
    }
    if (build->parsed()) {
      return cmd_build_map(build_args, build_files, no_normalize);
    }
    if (merge_cmd->parsed()) {
      return cmd_merge_maps(merge_args, merge_files);
    }
    if (analyze->parsed()) {
      return cmd_analyze(analyze_args, analyze_files);
    }
    if (refine_cmd->parsed()) {
      return cmd_refine(refine_args, map_path);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify_error(e);
  }
  return kExitUsage;
}
