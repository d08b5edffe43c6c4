#pragma once

#include <stdexcept>
#include <string>

namespace tubekit {

// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a documented precondition (non-finite coordinate, bad range).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A file could not be decoded. The message carries a "path:line" locator.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A decoded record violates a type invariant. The message names the record.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace tubekit
