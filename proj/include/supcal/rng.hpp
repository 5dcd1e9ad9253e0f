#ifndef SUPCAL_RNG_HPP
#define SUPCAL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace supcal {

/// Mix two 64-bit values into one (splitmix64 finalizer). Used to derive
/// independent seeds for sub-streams so that every stage of a pipeline owns
/// its own generator.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `stream`, element `index`, derived from `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return mix_seed(mix_seed(base, stream), index);
}

// Stream ids shared by the CLI and the experiment harness. Scene generation
// in `simulate` and in `refine` must derive the same seed from the same base
// so both commands see the same world.
namespace streams {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kFrameOracle = 2;  // per-frame, index = frame
inline constexpr std::uint64_t kPerturb = 3;      // per-run, index = run
inline constexpr std::uint64_t kRunOracle = 4;    // per-run, index = run
inline constexpr std::uint64_t kUniformSample = 5;
inline constexpr std::uint64_t kSgisSample = 6;
}  // namespace streams

/// Deterministic random generator. All sampling is implemented on top of the
/// standardized mt19937_64 bit stream, so results are reproducible across
/// platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal deviate (Box-Muller, pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Pair of independent standard normal deviates.
  Eigen::Vector2d normal2() {
    const double a = normal();
    const double b = normal();
    return {a, b};
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniformly distributed unit vector on the sphere.
  Eigen::Vector3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double t = uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(t), r * std::sin(t), z};
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace supcal

#endif  // SUPCAL_RNG_HPP
