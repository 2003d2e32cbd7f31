#pragma once

#include <stdexcept>
#include <string>

namespace hwstyle {

// Each category maps onto one CLI exit code (see tools/hwstyle.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unreadable files, unwritable outputs.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input values, shape mismatches, violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Non-finite losses and other numerical breakdowns.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Data that is well-formed but inconsistent: orphaned pairs, empty selections.
class DataMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace hwstyle
