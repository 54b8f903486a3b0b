#pragma once

#include <stdexcept>
#include <string>

namespace spnp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument violates its precondition (negative σ, T' < T, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A requested noise level falls outside what a schedule can represent.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A score evaluator was asked for a condition it does not accept.
class ConditionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed factorizations, CG that did not converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// The score server could not be reached or returned a malformed reply.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The score server speaks a different protocol version or contract.
class ProtocolError : public TransportError {
 public:
  using TransportError::TransportError;
};

}  // namespace spnp
