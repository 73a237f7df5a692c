#pragma once

#include <stdexcept>
#include <string>

namespace lrising {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters outside the domain where a quantity is defined (s <= d, bad box, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A quadrature or lattice sum could not reach the requested tolerance.
/// The best bracket found is kept so callers can still report it.
class ToleranceNotMet : public Error {
 public:
  ToleranceNotMet(const std::string& what, double value, double tail)
      : Error(what), value_(value), tail_(tail) {}

  double value() const noexcept { return value_; }
  double tail() const noexcept { return tail_; }

 private:
  double value_;
  double tail_;
};

/// Exhaustive enumeration requested beyond the supported size.
class EnumerationCapExceeded : public Error {
 public:
  using Error::Error;
};

/// Cached local fields no longer describe the configuration they were built for.
class StaleCache : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or checkpoint input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrising
