#pragma once

#include <stdexcept>
#include <string>

namespace nlgpc {

/// Shape disagreement between an operand and what the operation expects.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Barrier evaluated at or outside its interval (b - r/2, b + r/2).
struct BarrierDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A stencil evaluation produced a non-finite value.
struct NumericError : std::runtime_error {
  int perturbation_index;
  NumericError(const std::string& what, int index)
      : std::runtime_error(what), perturbation_index(index) {}
};

/// Newton system stayed singular after all damping retries.
struct SolverError : std::runtime_error {
  double final_damping;
  int attempts;
  SolverError(const std::string& what, double damping, int tries)
      : std::runtime_error(what), final_damping(damping), attempts(tries) {}
};

/// Weight-file decode failure; kind tells the caller what was wrong.
struct SerializationError : std::runtime_error {
  enum class Kind { BadMagic, BadVersion, BadLayerTable, Truncated, ChecksumMismatch };
  Kind kind;
  SerializationError(Kind k, const std::string& what)
      : std::runtime_error(what), kind(k) {}
};

/// Config file problem: syntax, unknown key, bad value, violated invariant.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset shorter than the history the horizon requires, empty logs, etc.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nlgpc
