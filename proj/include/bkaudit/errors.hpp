#pragma once

#include <stdexcept>
#include <string>

namespace bkaudit {

enum class ErrorKind {
  DomainError,
  SingularJacobian,
  DimensionMismatch,
  NonIntegrable,
  NaNEncountered,
  EmptySupport,
  NoConvergence,
  DivideByZero,
  NonPositiveLikelihood,
  SingularEvidence,
  NoMaximumInBracket,
  NonPositiveDensity,
  CDFInversionFailure,
  DegeneratePolygon,
  EmptyIntersection,
  NonFinite,
  ValidationError,
};

const char* error_kind_name(ErrorKind k);

// Single exception type; callers branch on kind().
class AuditError : public std::runtime_error {
 public:
  AuditError(ErrorKind kind, const std::string& what);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace bkaudit
