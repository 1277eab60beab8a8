#pragma once

#include <stdexcept>
#include <string>

namespace scl {

/// Base class of every recoverable failure raised by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad inputs: shapes, ranges, schemas, unknown names. Maps to CLI exit 1.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Numerical routines that failed to produce a usable result. CLI exit 2.
class NumericalError : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class NonFiniteEntry : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class LevelOutOfRange : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class ShapeMismatch : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class LengthMismatch : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class UnknownScenario : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class EmptyLog : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class InsufficientData : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class NonIdentifiable : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class NumericalFailure : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class NonFiniteState : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class RankDeficient : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

} // namespace scl
