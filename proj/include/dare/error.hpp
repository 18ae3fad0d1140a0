// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dare {

/// Thrown when an input violates a documented precondition: malformed files,
/// out-of-range config values, distributions that do not normalize. The CLI
/// maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dare
