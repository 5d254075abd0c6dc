#pragma once

#include <stdexcept>
#include <string>

namespace seaice {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed chart record or chart file.
class ChartError : public Error {
 public:
  using Error::Error;
};

/// Raster could not be read, or bands are incompatible.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or usage. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Weight archive or checkpoint does not fit the model it is loaded into.
class IncompatibleCheckpoint : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or an unusable training setup.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace seaice
