#pragma once

#include <stdexcept>
#include <string>

namespace cte {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad magic, unknown version or otherwise undecodable bytes.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented precondition or type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Unreadable/unwritable paths and truncated payloads.
class IoError : public Error {
 public:
  using Error::Error;
};

// Regularized scoring with lambda == 0 hit an all-zero query frequency.
class DivisionByZeroError : public Error {
 public:
  DivisionByZeroError(std::size_t frequency);
  std::size_t frequency() const noexcept { return frequency_; }

 private:
  std::size_t frequency_;
};

// Boundary refinement found no temporal overlap for any candidate shift.
class NoOverlapError : public Error {
 public:
  using Error::Error;
};

// A PQ code references a centroid that does not exist.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// An id in a request (anchor, edge, video) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace cte
