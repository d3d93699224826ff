#pragma once

#include <stdexcept>
#include <string>

namespace topoloop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: violated preconditions, out-of-range parameters.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Anything wrong with data read from disk or passed between stages.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class CorruptionError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyDataError : public DataError {
 public:
  using DataError::DataError;
};

class OrderingError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class CanonicalizationError : public DataError {
 public:
  using DataError::DataError;
};

class ConsistencyError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Process exit code for the CLI: 2 config/argument, 3 data, 4 numerical, 1 other.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace topoloop
