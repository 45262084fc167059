#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scorematch {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wrong dimension, wrong table size, symbol outside the alphabet, mismatched grids.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An operation was asked to work on a model/objective/operator kind it does not support.
class KindMismatch : public Error {
 public:
  using Error::Error;
};

// Parameter vector that does not describe a valid member of the family
// (wrong length, non-finite entry, non-PD covariance, ...).
class InvalidParams : public Error {
 public:
  using Error::Error;
};

// Enumeration or quadrature would exceed the supported size.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Non-finite objective, nonpositive density where a log is needed, singular moments.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A singleton conditional on a Brook telescoping path was zero.
class ZeroConditional : public NumericalError {
 public:
  ZeroConditional(std::size_t coordinate, const std::string& what)
      : NumericalError(what), coordinate_(coordinate) {}
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

}  // namespace scorematch
