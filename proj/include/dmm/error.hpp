#pragma once

#include <stdexcept>
#include <string>

namespace dmm {

// Base for all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is malformed or unusable (parse errors, shape mismatch, gaps).
class DataError : public Error {
 public:
  using Error::Error;
};

// Too few samples to form a covariance estimate.
class InsufficientData : public DataError {
 public:
  using DataError::DataError;
};

// A numeric object broke an invariant it needs (e.g. precision matrix not PD).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dmm
