#ifndef SUPCAL_SUPPORT_MAP_HPP
#define SUPCAL_SUPPORT_MAP_HPP

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "supcal/geometry.hpp"
#include "supcal/scene_sim.hpp"

namespace supcal {

/// An image location with a nonnegative agreement score.
struct ScoredSample {
  Pixel u;
  double a = 0.0;
};

/// Converts a residual into an agreement score in (0, 1]: a = exp(-|f|^2 /
/// (2 tau^2)). Strictly decreasing in |f|, equal to 1 at f = 0. Throws
/// InvalidTau for tau <= 0.
[[nodiscard]] double score_residual(const Eigen::Vector2d& f, double tau);

[[nodiscard]] std::vector<ScoredSample> score_correspondences(
    std::span<const Correspondence> corrs, double tau);

/// Dense grid over the image plane that accumulates Gaussian-smoothed
/// agreement scores. Cells cover `downsample` pixels per side; the cell
/// (ix, iy) is centered at pixel ((ix + 0.5) d, (iy + 0.5) d). Kernel
/// contributions are truncated at radius 3 sigma.
class SupportMap {
 public:
  /// Empty map sized for a width x height image. Grid dimensions are
  /// ceil(width / d) x ceil(height / d).
  SupportMap(int width, int height, int downsample, double sigma, double tau);

  /// Map with explicit grid dimensions (deserialization path).
  static SupportMap from_cells(int cells_x, int cells_y, int downsample,
                               double sigma, double tau);

  int cells_x() const { return static_cast<int>(grid_.cols()); }
  int cells_y() const { return static_cast<int>(grid_.rows()); }
  int downsample() const { return downsample_; }
  double sigma() const { return sigma_; }
  double tau() const { return tau_; }
  bool normalized() const { return normalized_; }

  /// Row-major cell values: grid()(iy, ix).
  const Eigen::ArrayXXd& grid() const { return grid_; }

  Pixel cell_center(int ix, int iy) const {
    const double d = static_cast<double>(downsample_);
    return {(ix + 0.5) * d, (iy + 0.5) * d};
  }

  /// Adds one batch of scored samples (typically one frame) into the grid.
  /// Throws AlreadyNormalized on a normalized map.
  void accumulate(std::span<const ScoredSample> samples);

  /// Divides every cell by the maximum so the range becomes [0, 1] with the
  /// maximum exactly 1. Idempotent. Throws AllZeroMap when no evidence was
  /// accumulated.
  void normalize();

  /// Bilinear interpolation of the normalized map at an image location;
  /// out-of-grid pixels clamp to the border cells. Throws NotNormalized.
  [[nodiscard]] double lookup(const Pixel& px) const;

  friend SupportMap merge(const SupportMap& a, const SupportMap& b);
  friend SupportMap load_map(const std::filesystem::path& path);

 private:
  SupportMap() = default;

  Eigen::ArrayXXd grid_;  // rows = cells_y, cols = cells_x
  int downsample_ = 1;
  double sigma_ = 1.0;
  double tau_ = 1.0;
  bool normalized_ = false;
};

/// Cell-wise sum of two unnormalized maps with identical geometry and
/// parameters. Commutative; the all-zero map is the identity element.
[[nodiscard]] SupportMap merge(const SupportMap& a, const SupportMap& b);

/// Binary serialization (magic SMAP, version 1, little-endian). Writes to a
/// temporary file and renames, so failures never leave a partial file.
void save_map(const SupportMap& map, const std::filesystem::path& path);
[[nodiscard]] SupportMap load_map(const std::filesystem::path& path);

/// 8-bit grayscale visualization (binary PGM, value * 255 rounded).
void write_map_image(const SupportMap& map, const std::filesystem::path& path);

}  // namespace supcal

#endif  // SUPCAL_SUPPORT_MAP_HPP
