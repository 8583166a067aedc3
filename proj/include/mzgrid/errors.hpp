#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mzgrid {

/// Argument outside the mathematical domain of a formula (e.g. ln V3 with V3 <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an API precondition (length mismatch, unknown index, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time integration left the admissible state space.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Linear algebra failure inside a solver, tagged with the time sample index.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t time_index)
      : std::runtime_error(what + " (time index " + std::to_string(time_index) + ")"),
        time_index_(time_index) {}
  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

}  // namespace mzgrid
