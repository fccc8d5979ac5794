#pragma once

#include <stdexcept>
#include <string>

namespace topocolor {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is missing, unreadable, malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// A file was produced by an incompatible format version.
class VersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

// A point cloud needs more slices or strips than the descriptor layout holds.
class DescriptorOverflow : public DataError {
 public:
  using DataError::DataError;
};

// An internal invariant failed; indicates a bug rather than bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace topocolor
