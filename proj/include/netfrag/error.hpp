#pragma once

#include <stdexcept>
#include <string>

namespace netfrag {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical or configuration parameter is out of range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A set of cuts does not form a valid concave envelope.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested state cannot be reached along the trajectory.
class UnreachableStateError : public Error {
 public:
  using Error::Error;
};

/// A scenario violates one of the recovery assumptions
/// (1: instantaneous onset, 2: base demand below outflow, 3: disruption side
/// of the critical accumulation).
class AssumptionError : public Error {
 public:
  AssumptionError(int assumption, const std::string& what)
      : Error("Assumption " + std::to_string(assumption) + " violated: " + what),
        assumption_(assumption) {}

  int assumption() const noexcept { return assumption_; }

 private:
  int assumption_;
};

/// Standard deviation of the samples is zero.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Curve or coefficient fitting failed.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A root bracket shows no sign change.
class OutOfRegionError : public Error {
 public:
  using Error::Error;
};

/// A stochastic trajectory reached the gridlock accumulation.
class GridlockError : public Error {
 public:
  using Error::Error;
};

/// Input file could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace netfrag
