#pragma once

#include <stdexcept>
#include <string>

namespace reltrace {

// Bad inputs: shape mismatches, invalid configs, malformed files.
// Maps to exit code 1 at the CLI and RT_STATUS_VALIDATION in the C API.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: factorization failure, NaN loss, non-finite objective.
// Maps to exit code 2 at the CLI and RT_STATUS_NUMERIC in the C API.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace reltrace
