#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace difactor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define DIFACTOR_DECLARE_ERROR(Name)                                  \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

DIFACTOR_DECLARE_ERROR(DomainError);
DIFACTOR_DECLARE_ERROR(UnboundVariable);
DIFACTOR_DECLARE_ERROR(CapacityExceeded);
DIFACTOR_DECLARE_ERROR(InvalidIndex);
DIFACTOR_DECLARE_ERROR(ArityMismatch);
DIFACTOR_DECLARE_ERROR(OrderOverflow);
DIFACTOR_DECLARE_ERROR(ShapeMismatch);
DIFACTOR_DECLARE_ERROR(UnsupportedTemplate);
DIFACTOR_DECLARE_ERROR(NoRealFactorization);
DIFACTOR_DECLARE_ERROR(NotConstant);
DIFACTOR_DECLARE_ERROR(NonPolynomialCoefficients);
DIFACTOR_DECLARE_ERROR(NonPolynomialSqrtDelta);
DIFACTOR_DECLARE_ERROR(SingularLeadingCoefficient);
DIFACTOR_DECLARE_ERROR(QuadratureFailure);
DIFACTOR_DECLARE_ERROR(StepCountTooSmall);
DIFACTOR_DECLARE_ERROR(ValidationError);

#undef DIFACTOR_DECLARE_ERROR

/// Syntax error in expression text or a problem file. Positions are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error("ParseError: " + std::to_string(line) + ":" + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column),
        message_(message) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

}  // namespace difactor
