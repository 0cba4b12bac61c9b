#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nisio {

/// Base of every error thrown by the library.
///
/// Errors fall into two families that the CLI maps to different exit codes:
/// input problems (bad config, bad expression, invalid problem data) and
/// numerical failures (an iteration that did not converge, a blow-up).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Stable machine-readable name, e.g. "SyntaxError".
  virtual const char* kind() const noexcept { return "Error"; }
  virtual bool numerical() const noexcept { return false; }
};

#define NISIO_DEFINE_ERROR(Name, Base, IsNumerical)                  \
  class Name : public Base {                                        \
   public:                                                          \
    using Base::Base;                                               \
    const char* kind() const noexcept override { return #Name; }    \
    bool numerical() const noexcept override { return IsNumerical; } \
  };

NISIO_DEFINE_ERROR(ValidationError, Error, false)
NISIO_DEFINE_ERROR(UnknownIdentifier, Error, false)
NISIO_DEFINE_ERROR(UnboundVariable, Error, false)
NISIO_DEFINE_ERROR(EvalError, Error, false)
NISIO_DEFINE_ERROR(DegenerateDiffusion, ValidationError, false)
NISIO_DEFINE_ERROR(NonFiniteCoefficient, ValidationError, false)
NISIO_DEFINE_ERROR(NonMonotoneStencil, ValidationError, false)
NISIO_DEFINE_ERROR(IndexOutOfRange, Error, false)
NISIO_DEFINE_ERROR(CflViolation, Error, false)
NISIO_DEFINE_ERROR(ZeroVector, Error, false)
NISIO_DEFINE_ERROR(NonPositiveVector, Error, false)
NISIO_DEFINE_ERROR(NonPositiveFunction, Error, false)
NISIO_DEFINE_ERROR(NonPositivePhi, Error, false)
NISIO_DEFINE_ERROR(NotIrreducible, Error, true)
NISIO_DEFINE_ERROR(NoConvergence, Error, true)
NISIO_DEFINE_ERROR(NonPositiveIterate, Error, true)
NISIO_DEFINE_ERROR(InsufficientData, Error, true)
NISIO_DEFINE_ERROR(NonPositiveEta, Error, true)
NISIO_DEFINE_ERROR(CycleDetected, Error, true)
NISIO_DEFINE_ERROR(NonFiniteState, Error, true)

#undef NISIO_DEFINE_ERROR

/// Malformed expression text; `offset()` is the byte offset of the
/// offending token.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  const char* kind() const noexcept override { return "SyntaxError"; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Config file problem anchored to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  const char* kind() const noexcept override { return "ParseError"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace nisio
