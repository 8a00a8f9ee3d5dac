#pragma once

#include <stdexcept>
#include <string>

namespace illab {

// Invalid construction parameters, dimension mismatches, bad config files.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A policy emitted an invalid action distribution at sampling time.
struct PolicyError : std::runtime_error {
  explicit PolicyError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values reached a numeric kernel.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Illegal parser transition.
struct TransitionError : std::runtime_error {
  explicit TransitionError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed runtime data (empty trajectory batch, nonpositive recorded density).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Operation requires a capability the oracle/estimator combination lacks.
struct UnsupportedModeError : std::runtime_error {
  explicit UnsupportedModeError(const std::string& what) : std::runtime_error(what) {}
};

// A test oracle failed to converge; the check using it must abort, not pass.
struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

// Degenerate descent direction (g.delta <= 0); the step is skipped.
struct DegenerateDirectionError : std::runtime_error {
  explicit DegenerateDirectionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace illab
