#pragma once

#include <stdexcept>
#include <string>

namespace postsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A truncation region carries (numerically) zero probability mass.
class DegenerateRegion : public Error {
 public:
  using Error::Error;
};

/// Two absolute values tie at the top-K selection boundary.
class TieAtBoundary : public Error {
 public:
  using Error::Error;
};

/// A selection outcome does not belong to the data it is paired with.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was violated (for example EM monotonicity).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace postsel
