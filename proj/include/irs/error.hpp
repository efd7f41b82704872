#pragma once

#include <stdexcept>

namespace irs {

/// Bad input or violated precondition. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file could not be opened, read or written (exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant did not hold, e.g. a populated cell with zero total weight.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace irs
