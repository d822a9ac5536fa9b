#pragma once

#include <stdexcept>
#include <string>

namespace bodelim {

/// Invalid argument or violated precondition on a value.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver or algorithm failure (root finding, matrix functions, quadrature).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation requested at (or numerically on top of) a pole.
class PoleProximityError : public DomainError {
 public:
  PoleProximityError(const std::string& what, double distance)
      : DomainError(what), distance_(distance) {}
  double distance() const noexcept { return distance_; }

 private:
  double distance_;
};

/// Closed loop is not Hurwitz where a stationary analysis needs it.
class UnstableLoopError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bodelim
