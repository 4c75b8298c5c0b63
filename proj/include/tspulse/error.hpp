#pragma once

#include <stdexcept>
#include <string>

namespace tspulse {

/// Base class for every error raised by the library. The CLI maps the
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not conform for the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A function argument is outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Model or run configuration is invalid or does not match the data.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A binary file has the wrong magic, version or layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed (missing, truncated, unwritable).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Parsing a text file failed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Keyed collections that must agree (params/grads/state) do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// An API was used in a way that violates its preconditions.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// The request exceeds a supported capability (e.g. interpolation ratio).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// An inverse transform is singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tspulse
