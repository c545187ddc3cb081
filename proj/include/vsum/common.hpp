#pragma once

#include <stdexcept>
#include <string>

namespace vsum {

// Base for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension or structural mismatch between inputs.
struct ShapeError : Error {
  using Error::Error;
};

// A precondition of an operation was violated (empty input, index out of
// range, size guard exceeded, insufficient data, invalid target, ...).
struct ContractError : Error {
  using Error::Error;
};

// Numerical failure: not PSD after the jitter ladder, singular minor,
// non-finite gradient, and the like.
struct NumericError : Error {
  using Error::Error;
};

// Malformed file contents.
struct ParseError : Error {
  using Error::Error;
};

// File format version not understood by this build.
struct VersionError : ParseError {
  using ParseError::ParseError;
};

// Invalid run configuration (bad split, missing annotations, unknown model).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace vsum
