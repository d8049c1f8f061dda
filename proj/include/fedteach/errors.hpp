#pragma once

#include <stdexcept>
#include <string>

namespace fedteach {

/// Malformed configs, policy/strategy spec strings, or input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A runtime invariant was broken (e.g. an adjusted reward left [0,1]).
/// Always indicates a bug in a policy or strategy, never bad user input.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedteach
