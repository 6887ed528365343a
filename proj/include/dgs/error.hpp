#pragma once

#include <stdexcept>
#include <string>

namespace dgs {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (manifests, configs, label sets).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A distribution with no usable spread or mass (all-zero histogram, max == min).
class DegenerateDistribution : public Error {
 public:
  using Error::Error;
};

/// Not enough items to satisfy a requested selection or clustering.
class InsufficientSupply : public Error {
 public:
  using Error::Error;
};

/// Unmet per-interval demand under the `fail` deficit rule.
class DeficitError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgs
