#pragma once

#include <stdexcept>
#include <string>

namespace superball {

/// Raised when caller-supplied parameters violate a precondition.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a computation cannot produce a trustworthy result
/// (failed root bracket, non-negligible series tail, recomputed violation).
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

}  // namespace detail
}  // namespace superball
