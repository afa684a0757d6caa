#pragma once

#include <stdexcept>
#include <string>

namespace attrib {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P(D+) is zero, so the attributable fraction is undefined.
class DegenerateDisease : public Error {
 public:
  DegenerateDisease() : Error("P(D+) is zero; PAF undefined") {}
};

/// A truncated distribution carries (numerically) no mass on the interval.
class DegenerateInterval : public Error {
 public:
  using Error::Error;
};

class NotPSD : public Error {
 public:
  using Error::Error;
};

/// Joint (phi1, phi2) or (p, q) redraw exceeded its rejection cap.
class RejectionStall : public Error {
 public:
  using Error::Error;
};

/// Se + Sp == 1: the misclassification map cannot be inverted.
class SingularTest : public Error {
 public:
  SingularTest() : Error("Se + Sp = 1: misclassification map is singular") {}
};

class OutOfSupport : public Error {
 public:
  using Error::Error;
};

class EmptyChain : public Error {
 public:
  EmptyChain() : Error("chain has no draws") {}
};

class ZeroVariance : public Error {
 public:
  ZeroVariance() : Error("series has zero variance") {}
  using Error::Error;
};

class AllZeroWeights : public Error {
 public:
  AllZeroWeights() : Error("all importance weights are zero") {}
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace attrib
