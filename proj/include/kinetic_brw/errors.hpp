#pragma once

#include <stdexcept>
#include <string>

namespace kinetic_brw {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An analysis could not be completed (bracketing, noise, particle budget).
/// The CLI maps these to exit status 2.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BracketError : public AnalysisError {
 public:
  BracketError(const std::string& what, double d_lo, double d_hi)
      : AnalysisError(what), d_lo_(d_lo), d_hi_(d_hi) {}
  double d_lo() const { return d_lo_; }
  double d_hi() const { return d_hi_; }

 private:
  double d_lo_;
  double d_hi_;
};

class BudgetError : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

/// Invalid or malformed run configuration (exit status 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kinetic_brw
