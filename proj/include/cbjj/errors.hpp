#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cbjj {

/// Argument outside the physical domain of a model (e.g. bias >= I_c).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: non-convergence, instability, overflow.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested work exceeds a configured resource budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Warnings = std::vector<std::string>;

}  // namespace cbjj
