#pragma once

#include <stdexcept>
#include <string>

namespace chordarc {

// Base for every error the library raises. The CLI maps the concrete type
// to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad parameter, malformed config).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A configured size guard was hit (dyadic level, cell budget).
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

// The numerical construction could not be completed as defined
// (empty corrector support, no admissible c11, source in the tube, ...).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Evaluation at a singular point: a point on the curve for the regularized
// distance, or a point coinciding with a source for the potential.
class SingularInput : public Error {
 public:
  using Error::Error;
};

}  // namespace chordarc
