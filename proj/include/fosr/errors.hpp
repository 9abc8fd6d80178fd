#pragma once

#include <stdexcept>
#include <string>

namespace fosr {

// Invalid user-supplied configuration (missing keys, bad values). The CLI maps
// this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical procedure could not produce a result (failed factorization,
// rank deficiency, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fosr
