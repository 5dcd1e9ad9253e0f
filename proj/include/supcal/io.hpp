#ifndef SUPCAL_IO_HPP
#define SUPCAL_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "supcal/scene_sim.hpp"

namespace supcal {

/// Formats a double as decimal text with 17 significant digits.
[[nodiscard]] std::string format_double(double value);

/// Writes `data` to a temporary file next to `path` and renames it into
/// place, so a failure never leaves a partially written output file.
/// Throws IoFailure.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& data);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

// Scene points, CSV with header x,y,z,class_id,point_id.
void save_scene_points(std::span<const ScenePoint> points,
                       const std::filesystem::path& path);
[[nodiscard]] std::vector<ScenePoint> load_scene_points(
    const std::filesystem::path& path);

// Correspondences, CSV with header point_id,class_id,u,v,du,dv.
void save_correspondences(std::span<const Correspondence> corrs,
                          const std::filesystem::path& path);
[[nodiscard]] std::vector<Correspondence> load_correspondences(
    const std::filesystem::path& path);

}  // namespace supcal

#endif  // SUPCAL_IO_HPP
