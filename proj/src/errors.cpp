#include "bkaudit/errors.hpp"

namespace bkaudit {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::NaNEncountered: return "NaNEncountered";
    case ErrorKind::EmptySupport: return "EmptySupport";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DivideByZero: return "DivideByZero";
    case ErrorKind::NonPositiveLikelihood: return "NonPositiveLikelihood";
    case ErrorKind::SingularEvidence: return "SingularEvidence";
    case ErrorKind::NoMaximumInBracket: return "NoMaximumInBracket";
    case ErrorKind::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorKind::CDFInversionFailure: return "CDFInversionFailure";
    case ErrorKind::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

AuditError::AuditError(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw AuditError(kind, what); }

}  // namespace bkaudit
