#pragma once

#include <stdexcept>
#include <string>

namespace ddpecann {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration or partition request.
struct ConfigError : Error {
  using Error::Error;
};

/// Degenerate or inconsistent geometry (intersecting curves, empty regions).
struct GeometryError : Error {
  using Error::Error;
};

/// Non-finite loss or gradient during training.
struct DivergenceError : Error {
  using Error::Error;
};

/// Violation of the interface exchange protocol or a dual-state invariant.
struct ProtocolError : Error {
  using Error::Error;
};

/// Malformed report or data file.
struct FormatError : Error {
  using Error::Error;
};

}  // namespace ddpecann
