#pragma once

#include <stdexcept>
#include <string>

namespace eigennoise {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, datasets, matrices).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to converge or produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace eigennoise
