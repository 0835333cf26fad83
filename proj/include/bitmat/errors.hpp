#pragma once

#include <stdexcept>
#include <string>

namespace bitmat {

// Error taxonomy mirrored by the CLI exit codes (see tools/bitmat_main.cpp):
// parse -> 2, identifiability -> 3, numeric -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IdentifiabilityError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace bitmat
