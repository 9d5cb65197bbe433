#pragma once

#include <stdexcept>
#include <string>

namespace shallownet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A file exists but its contents are malformed (checkpoint, manifest, PNG).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Dataset problems: missing directories, no images, degenerate splits.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace shallownet
