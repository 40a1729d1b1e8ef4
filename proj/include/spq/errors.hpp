#pragma once

#include <stdexcept>
#include <string>

namespace spq {

/// Bad input: dimension mismatch, invalid parameter, site outside region.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration document failed validation (unknown key, wrong type, ...).
class ConfigError : public ArgumentError {
public:
  using ArgumentError::ArgumentError;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept { return "numerical_error"; }
};

/// Local kernel mass g_n(x) is below the admissible threshold.
class NoMassError : public NumericalError {
public:
  using NumericalError::NumericalError;
  const char* code() const noexcept override { return "no_mass"; }
};

class BracketFailure : public NumericalError {
public:
  using NumericalError::NumericalError;
  const char* code() const noexcept override { return "bracket_failure"; }
};

/// Conditional density at the quantile underflowed; the asymptotic interval is undefined.
class ZeroDensityError : public NumericalError {
public:
  using NumericalError::NumericalError;
  const char* code() const noexcept override { return "zero_density"; }
};

class SelectionError : public NumericalError {
public:
  using NumericalError::NumericalError;
  const char* code() const noexcept override { return "selection_error"; }
};

}  // namespace spq
