#pragma once

#include <stdexcept>
#include <string>

namespace xcoref {

// Base for every error the library raises. The CLI maps each subclass to a
// distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (JSON syntax, wrong field types, bad binary header).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input parsed but violates a data-model invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// File could not be opened / read / written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace xcoref
