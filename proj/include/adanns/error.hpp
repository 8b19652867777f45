#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adanns {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A prefix width, scan dimension or vector length is out of range.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters (indivisible sub-space count, n_p > k, empty grid, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Fewer training points than requested clusters.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary content. The message names the byte offset.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace adanns
