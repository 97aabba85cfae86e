#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ido {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point-cloud, map or pair file could not be parsed.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyCloudError : public Error {
 public:
  using Error::Error;
};

/// Input geometry is too degenerate for the requested operation
/// (collinear correspondences, zero-extent clouds, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Map sequence and model context disagree (dimension, mode or fingerprint).
class MapMismatchError : public Error {
 public:
  using Error::Error;
};

/// A non-finite feature or residual showed up while training.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t sample, std::size_t iteration, const std::string& what);

  std::size_t sample() const noexcept { return sample_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t sample_;
  std::size_t iteration_;
};

}  // namespace ido
