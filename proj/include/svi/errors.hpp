#pragma once

#include <stdexcept>
#include <string>

namespace svi {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed data: empty vertex lists, non-finite entries, broken invariants.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Iteration budget of an inner solver exceeded.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Parameter outside the range covered by tabulated data.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// No alpha > 1 admits increase witnesses at the point.
class PropertyAbsent : public Error {
 public:
  using Error::Error;
};

/// A quantitative hypothesis (e.g. ell < 1 - 1/inc) is violated.
class HypothesisViolated : public Error {
 public:
  using Error::Error;
};

/// Segment step requested from a point already inside the constraint set.
class AlreadyFeasible : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedCombination : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace svi
