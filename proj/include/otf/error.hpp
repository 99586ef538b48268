#pragma once

#include <stdexcept>
#include <string>

namespace otf {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input: dimension mismatches, bad files, unknown
// ids, out-of-range arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite value or hit an internal numeric
// invariant violation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace otf
