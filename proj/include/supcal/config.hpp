#ifndef SUPCAL_CONFIG_HPP
#define SUPCAL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "supcal/refine.hpp"
#include "supcal/scene_sim.hpp"

namespace supcal {

/// Support-map construction parameters.
struct MapParams {
  double sigma = 8.0;  // kernel width, pixels
  double tau = 2.0;    // score scale, pixels
  int downsample = 4;  // pixels per cell
};

/// Everything one experiment needs, loaded from a single JSON file so a run
/// is reproducible from the config alone (seeds included).
struct ExperimentConfig {
  SceneSpec scene;
  PerturbationSpec perturbation;  // magnitudes; per-run seeds derive from base_seed
  MapParams map;
  SamplingPlan sampling;  // k and replacement; per-run seeds derive from base_seed
  RefineOptions refine;
  bool divide_by_probability = false;
  int n_frames = 1;
  int n_runs = 10;
  std::uint64_t base_seed = 0;
};

/// Parses and validates a JSON config document. Throws ConfigError with the
/// offending field path on any structural or invariant violation.
[[nodiscard]] ExperimentConfig parse_config(const std::string& json_text);

/// parse_config on the contents of `path`. Throws IoFailure, ConfigError.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace supcal

#endif  // SUPCAL_CONFIG_HPP
