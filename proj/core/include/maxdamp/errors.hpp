#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace maxdamp
{

enum class ErrorKind
{
  invalid_parameter,
  shape,
  material,
  solver,
  consistency,
  stability,
  unsupported_scheme,
  interface,
  range,
  config,
  control_infeasible,
  budget,
  precision,
  io,
};

/// Base error for everything thrown by the library. The kind is stable and
/// is what the command line tool reports in its machine-readable error object.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind)
  {
  }

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// CG or CGLS failed to reach the requested residual.
class SolverError : public Error
{
public:
  SolverError(const std::string &message, double residual, int iterations)
      : Error(ErrorKind::solver, message), residual_(residual), iterations_(iterations)
  {
  }

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double residual_;
  int iterations_;
};

/// The control Gramian could not be inverted to the requested tolerance.
class ControlInfeasibleError : public Error
{
public:
  ControlInfeasibleError(const std::string &message, double condition_estimate)
      : Error(ErrorKind::control_infeasible, message), condition_(condition_estimate)
  {
  }

  double condition_estimate() const noexcept { return condition_; }

private:
  double condition_;
};

/// Configuration error carrying the offending key and source line (0 if unknown).
class ConfigError : public Error
{
public:
  ConfigError(const std::string &message, std::string key, int line)
      : Error(ErrorKind::config, message), key_(std::move(key)), line_(line)
  {
  }

  const std::string &key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

private:
  std::string key_;
  int line_;
};

inline std::string_view to_string(ErrorKind kind) noexcept
{
  switch (kind)
  {
  case ErrorKind::invalid_parameter: return "invalid_parameter";
  case ErrorKind::shape: return "shape";
  case ErrorKind::material: return "material";
  case ErrorKind::solver: return "solver";
  case ErrorKind::consistency: return "consistency";
  case ErrorKind::stability: return "stability";
  case ErrorKind::unsupported_scheme: return "unsupported_scheme";
  case ErrorKind::interface: return "interface";
  case ErrorKind::range: return "range";
  case ErrorKind::config: return "config";
  case ErrorKind::control_infeasible: return "control_infeasible";
  case ErrorKind::budget: return "budget";
  case ErrorKind::precision: return "precision";
  case ErrorKind::io: return "io";
  }
  return "unknown";
}

} // namespace maxdamp
