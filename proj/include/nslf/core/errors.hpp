#pragma once

#include <stdexcept>
#include <string>

namespace nslf {

/// Root of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/array dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input outside the function's domain (non-unit direction, out-of-cube point, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A world point could not be routed to a region.
class RoutingError : public Error {
 public:
  using Error::Error;
};

/// Operation not allowed in the runtime's current mode.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-finite loss or gradient).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing input data on disk.
class DataError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

}  // namespace nslf
