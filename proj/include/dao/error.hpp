#pragma once

#include <stdexcept>
#include <string>

namespace dao {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (log of 0, NaN class score).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a precondition (non-scalar loss, empty batch).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or incompatible serialized record.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed input corpus. Carries the offending 1-based line number (0 if not line-specific).
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dao
