#ifndef SUPCAL_ERRORS_HPP
#define SUPCAL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace supcal {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// geometry
struct NearPiRotation : Error {
  using Error::Error;
};

// scene_sim
struct EmptySpec : Error {
  using Error::Error;
};
struct NoVisiblePoints : Error {
  using Error::Error;
};

// support_map
struct InvalidTau : Error {
  using Error::Error;
};
struct AlreadyNormalized : Error {
  using Error::Error;
};
struct NotNormalized : Error {
  using Error::Error;
};
struct AllZeroMap : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct IoFailure : Error {
  using Error::Error;
};
struct BadMagic : Error {
  using Error::Error;
};
struct VersionMismatch : Error {
  using Error::Error;
};

// refine
struct DegenerateSupport : Error {
  using Error::Error;
};
struct InsufficientPopulation : Error {
  using Error::Error;
};
struct RankDeficient : Error {
  using Error::Error;
};

// analysis
struct LengthMismatch : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};

// configuration / CLI plumbing
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace supcal

#endif  // SUPCAL_ERRORS_HPP
