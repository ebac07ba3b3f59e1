#pragma once

#include <stdexcept>
#include <string>

namespace qel {

/// Base class for every error raised by the lab. Precondition violations on
/// plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A compactly supported source reaches the edge of the computational hull.
class SupportError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver or integrator failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A time step would exceed the CFL limit, or the tracked frame became invalid.
class StepError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, series or checkpoint input.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace qel
