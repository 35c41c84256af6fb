#pragma once

#include <stdexcept>
#include <string>

namespace qcels {

// Base for every error raised by the library. Subclasses name the failure
// category so callers (and the CLI) can map them to messages and exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problem size exceeds what dense methods handle (site counts, dimensions).
class SizeError : public Error {
 public:
  using Error::Error;
};

// Parameter outside its mathematical domain (p0, epsilon, delta, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Input is degenerate for the requested operation (zero matrix, zero filter).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Precondition on structured input violated (non-Hermitian, length mismatch).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Relative overlap denominator vanished.
class UndefinedOverlapError : public Error {
 public:
  using Error::Error;
};

// A construction could not meet its target (filter degree cap, delta bound).
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double best_achieved)
      : Error(what), best_achieved_(best_achieved) {}

  double best_achieved() const noexcept { return best_achieved_; }

 private:
  double best_achieved_;
};

// Malformed file or config. The message carries line and/or field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace qcels
