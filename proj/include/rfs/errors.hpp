#pragma once

#include <stdexcept>
#include <string>

namespace rfs {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeLimitError : public Error {
 public:
  using Error::Error;
};

class InvalidFieldError : public Error {
 public:
  using Error::Error;
};

class SpaceMismatchError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical failures. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DifferencingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NullConditioningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ImpossibleMeasurementError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rfs
