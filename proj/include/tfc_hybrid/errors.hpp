#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfc {

/// Base class of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid sizes, indices, option values or problem definitions.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Derivative order outside 0..2.
class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent dimensions between a layout and the grids or bases fed to it.
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// An operation was called on a problem it does not apply to.
class MisuseError : public Error {
 public:
  using Error::Error;
};

/// Requested analytic data that the problem does not carry.
class MissingAnalyticError : public Error {
 public:
  using Error::Error;
};

/// Gauss-Newton residual grew for too many consecutive iterations.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace tfc
