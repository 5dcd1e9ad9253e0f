#include "supcal/support_map.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "supcal/errors.hpp"
#include "supcal/io.hpp"

namespace supcal {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'A', 'P'};
constexpr std::uint32_t kFormatVersion = 1;

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void append_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& name)
      : data_(data), name_(name) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(data_[pos_ + i]))
              << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw IoFailure("truncated map file: " + name_);
    }
  }

 private:
  const std::string& data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

double score_residual(const Eigen::Vector2d& f, double tau) {
  if (!(tau > 0.0)) {
    throw InvalidTau("score_residual: tau must be positive");
  }
  return std::exp(-f.squaredNorm() / (2.0 * tau * tau));
}

std::vector<ScoredSample> score_correspondences(
    std::span<const Correspondence> corrs, double tau) {
  std::vector<ScoredSample> samples;
  samples.reserve(corrs.size());
  for (const auto& corr : corrs) {
    samples.push_back({corr.u, score_residual(corr.f, tau)});
  }
  return samples;
}

SupportMap::SupportMap(int width, int height, int downsample, double sigma,
                       double tau) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("SupportMap: image size must be positive");
  }
  if (downsample < 1) {
    throw std::invalid_argument("SupportMap: downsample must be >= 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("SupportMap: sigma must be positive");
  }
  if (!(tau > 0.0)) {
    throw InvalidTau("SupportMap: tau must be positive");
  }
  const int cx = (width + downsample - 1) / downsample;
  const int cy = (height + downsample - 1) / downsample;
  grid_ = Eigen::ArrayXXd::Zero(cy, cx);
  downsample_ = downsample;
  sigma_ = sigma;
  tau_ = tau;
}

SupportMap SupportMap::from_cells(int cells_x, int cells_y, int downsample,
                                  double sigma, double tau) {
  if (cells_x <= 0 || cells_y <= 0) {
    throw std::invalid_argument("SupportMap: grid size must be positive");
  }
  SupportMap map;
  map.grid_ = Eigen::ArrayXXd::Zero(cells_y, cells_x);
  map.downsample_ = downsample;
  map.sigma_ = sigma;
  map.tau_ = tau;
  return map;
}

void SupportMap::accumulate(std::span<const ScoredSample> samples) {
  if (normalized_) {
    throw AlreadyNormalized("accumulate: map is already normalized");
  }
  const double d = static_cast<double>(downsample_);
  const double radius = 3.0 * sigma_;
  const double radius2 = radius * radius;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma_ * sigma_);

  for (const auto& sample : samples) {
    if (sample.a < 0.0) {
      throw std::invalid_argument("accumulate: negative score");
    }
    if (sample.a == 0.0) {
      continue;
    }
    // Cell index range whose centers can lie within the truncation radius.
    const int ix_lo = std::max(
        0, static_cast<int>(std::floor((sample.u.u - radius) / d - 0.5)));
    const int ix_hi = std::min(
        cells_x() - 1,
        static_cast<int>(std::ceil((sample.u.u + radius) / d - 0.5)));
    const int iy_lo = std::max(
        0, static_cast<int>(std::floor((sample.u.v - radius) / d - 0.5)));
    const int iy_hi = std::min(
        cells_y() - 1,
        static_cast<int>(std::ceil((sample.u.v + radius) / d - 0.5)));

    for (int iy = iy_lo; iy <= iy_hi; ++iy) {
      const double dy = (iy + 0.5) * d - sample.u.v;
      for (int ix = ix_lo; ix <= ix_hi; ++ix) {
        const double dx = (ix + 0.5) * d - sample.u.u;
        const double r2 = dx * dx + dy * dy;
        if (r2 <= radius2) {
          grid_(iy, ix) += sample.a * std::exp(-r2 * inv_two_sigma2);
        }
      }
    }
  }
}

void SupportMap::normalize() {
  if (normalized_) {
    return;
  }
  const double max = grid_.maxCoeff();
  if (!(max > 0.0)) {
    throw AllZeroMap("normalize: no calibration evidence accumulated");
  }
  grid_ /= max;
  normalized_ = true;
}

double SupportMap::lookup(const Pixel& px) const {
  if (!normalized_) {
    throw NotNormalized("lookup: map must be normalized first");
  }
  const double d = static_cast<double>(downsample_);
  // Continuous cell coordinates: cell centers sit at integer values.
  const double gx =
      std::clamp(px.u / d - 0.5, 0.0, static_cast<double>(cells_x() - 1));
  const double gy =
      std::clamp(px.v / d - 0.5, 0.0, static_cast<double>(cells_y() - 1));
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const int x1 = std::min(x0 + 1, cells_x() - 1);
  const int y1 = std::min(y0 + 1, cells_y() - 1);
  const double fx = gx - x0;
  const double fy = gy - y0;
  const double top = (1.0 - fx) * grid_(y0, x0) + fx * grid_(y0, x1);
  const double bottom = (1.0 - fx) * grid_(y1, x0) + fx * grid_(y1, x1);
  return (1.0 - fy) * top + fy * bottom;
}

SupportMap merge(const SupportMap& a, const SupportMap& b) {
  if (a.normalized_ || b.normalized_) {
    throw AlreadyNormalized("merge: inputs must be unnormalized");
  }
  if (a.cells_x() != b.cells_x() || a.cells_y() != b.cells_y() ||
      a.downsample_ != b.downsample_ || a.sigma_ != b.sigma_ ||
      a.tau_ != b.tau_) {
    throw ShapeMismatch("merge: maps have different geometry or parameters");
  }
  SupportMap out = a;
  out.grid_ += b.grid_;
  return out;
}

void save_map(const SupportMap& map, const std::filesystem::path& path) {
  std::string out;
  out.reserve(32 + static_cast<std::size_t>(map.cells_x()) *
                       static_cast<std::size_t>(map.cells_y()) * 8);
  out.append(kMagic, 4);
  append_u32(out, kFormatVersion);
  append_u32(out, static_cast<std::uint32_t>(map.cells_x()));
  append_u32(out, static_cast<std::uint32_t>(map.cells_y()));
  append_u32(out, static_cast<std::uint32_t>(map.downsample()));
  append_f64(out, map.sigma());
  append_f64(out, map.tau());
  out.push_back(map.normalized() ? '\1' : '\0');
  for (int iy = 0; iy < map.cells_y(); ++iy) {
    for (int ix = 0; ix < map.cells_x(); ++ix) {
      append_f64(out, map.grid()(iy, ix));
    }
  }
  write_file_atomic(path, out);
}

SupportMap load_map(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw BadMagic("load_map: not a support map file: " + path.string());
  }
  Reader reader(data, path.string());
  reader.u32();  // magic, already checked
  const std::uint32_t version = reader.u32();
  if (version != kFormatVersion) {
    throw VersionMismatch("load_map: unsupported version in " + path.string());
  }
  const auto cells_x = static_cast<int>(reader.u32());
  const auto cells_y = static_cast<int>(reader.u32());
  const auto downsample = static_cast<int>(reader.u32());
  const double sigma = reader.f64();
  const double tau = reader.f64();
  const bool normalized = reader.u8() != 0;
  if (cells_x <= 0 || cells_y <= 0 || downsample < 1 || !(sigma > 0.0) ||
      !(tau > 0.0)) {
    throw IoFailure("load_map: invalid header fields in " + path.string());
  }

  SupportMap map;
  map.grid_.resize(cells_y, cells_x);
  for (int iy = 0; iy < cells_y; ++iy) {
    for (int ix = 0; ix < cells_x; ++ix) {
      map.grid_(iy, ix) = reader.f64();
    }
  }
  map.downsample_ = downsample;
  map.sigma_ = sigma;
  map.tau_ = tau;
  map.normalized_ = normalized;
  return map;
}

void write_map_image(const SupportMap& map, const std::filesystem::path& path) {
  std::string out = "P5\n" + std::to_string(map.cells_x()) + " " +
                    std::to_string(map.cells_y()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(map.cells_x()) *
                               static_cast<std::size_t>(map.cells_y()));
  for (int iy = 0; iy < map.cells_y(); ++iy) {
    for (int ix = 0; ix < map.cells_x(); ++ix) {
      const double v = std::clamp(map.grid()(iy, ix), 0.0, 1.0);
      out.push_back(static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  write_file_atomic(path, out);
}

}  // namespace supcal
