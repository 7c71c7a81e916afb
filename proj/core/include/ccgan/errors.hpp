#pragma once

#include <stdexcept>
#include <string>

namespace ccgan {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible tensor or batch shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An API precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid run or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid network or task specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccgan
