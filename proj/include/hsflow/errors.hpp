#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hsflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad grid, out-of-band samples, ...).
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// The interface comes too close to a fixed boundary for the grid to resolve it.
class ResolutionInsufficient : public InvalidInput {
public:
  using InvalidInput::InvalidInput;
};

/// A normal-derivative probe point left the phase it was supposed to sample.
class ProbeOutOfPhase : public Error {
public:
  ProbeOutOfPhase(const std::string& what, int column) : Error(what), column_(column) {}
  int column() const noexcept { return column_; }

private:
  int column_;
};

/// An iterative solver hit its iteration cap before reaching the requested residual.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  double last_residual() const noexcept { return history_.empty() ? 0.0 : history_.back(); }
  const std::vector<double>& history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

/// The evolved interface left the admissible band [delta, upper].
class PhaseBandViolation : public Error {
public:
  PhaseBandViolation(const std::string& what, double t, std::vector<int> columns)
      : Error(what), t_(t), columns_(std::move(columns)) {}
  double time() const noexcept { return t_; }
  const std::vector<int>& columns() const noexcept { return columns_; }

private:
  double t_;
  std::vector<int> columns_;
};

/// Configuration file problems; carries the offending key and (when known) line.
class ConfigError : public Error {
public:
  ConfigError(const std::string& what, std::string key, int line = -1)
      : Error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

private:
  std::string key_;
  int line_;
};

}  // namespace hsflow
