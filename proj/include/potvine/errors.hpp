#ifndef POTVINE_ERRORS_HPP
#define POTVINE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace potvine {

// Base of every potvine error. The three direct children map onto CLI exit
// codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public DataError {
 public:
  using DataError::DataError;
};

class ZeroVariance : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientExceedances : public DataError {
 public:
  using DataError::DataError;
};

class EmptyWorld : public DataError {
 public:
  using DataError::DataError;
};

class ConvergenceFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

class AllThresholdsRejected : public NumericError {
 public:
  using NumericError::NumericError;
};

class NonFiniteDensity : public NumericError {
 public:
  using NumericError::NumericError;
};

class AnchorViolation : public NumericError {
 public:
  using NumericError::NumericError;
};

class HorizonExceedsOrder : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class OutOfRange : public NumericError {
 public:
  using NumericError::NumericError;
};

class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ZeroVector : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace potvine

#endif  // POTVINE_ERRORS_HPP
