#pragma once

#include <stdexcept>
#include <string>

namespace loyalty {

// Invalid configuration, flags, or schema. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be used (unparseable, empty, inconsistent).
// Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace loyalty
