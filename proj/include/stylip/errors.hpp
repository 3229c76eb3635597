#pragma once

#include <stdexcept>
#include <string>

namespace stylip {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or dimensions that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values, malformed config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke a precondition of an operation (non-scalar loss, empty label set, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vectors fed to cosine similarity.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace stylip
