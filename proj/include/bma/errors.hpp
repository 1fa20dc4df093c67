#pragma once

#include <stdexcept>
#include <string>

namespace bma {

/// Invalid run configuration or prior (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments outside the mathematical domain of an operation.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace bma
