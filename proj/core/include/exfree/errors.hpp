#pragma once

#include <stdexcept>
#include <string>

namespace exfree {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class OutOfTruncation : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidOperator : public Error {
 public:
  using Error::Error;
};

// Parameters outside the oscillatory regime delta > 2*sqrt(2)*g.
class RegimeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedAsymmetry : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class DegenerateProjection : public Error {
 public:
  using Error::Error;
};

class BudgetUndefined : public Error {
 public:
  using Error::Error;
};

}  // namespace exfree
