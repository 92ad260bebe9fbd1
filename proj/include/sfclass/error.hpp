#pragma once

#include <stdexcept>
#include <string>

namespace sfclass {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The input makes the requested quantity undefined (zero overlap vector,
/// singular formula, empty sample).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to stabilize.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}
}  // namespace detail

}  // namespace sfclass
