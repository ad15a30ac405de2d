#pragma once

#include <stdexcept>
#include <string>

namespace byzsim {

// Invalid experiment configuration (bad parameter values, incompatible
// problem/attack combinations). Maps to a nonzero CLI exit code.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Caller misuse of a library operation (empty input lists, ragged
// dimensions). Also maps to a nonzero CLI exit code.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace byzsim
