#pragma once

#include <stdexcept>
#include <string>

namespace nab {

// Bad arguments or malformed inputs (CLI exit code 1).
struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input graph violates a model assumption (n >= 3f+1, connectivity, ...).
struct model_violation : validation_error {
  explicit model_violation(const std::string& msg) : validation_error(msg) {}
};

// A requested combinatorial object does not exist (packing too large, ...).
struct infeasible_error : std::runtime_error {
  explicit infeasible_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A protocol invariant that should be unbreakable broke (CLI exit code 2).
struct internal_error : std::logic_error {
  explicit internal_error(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace nab
