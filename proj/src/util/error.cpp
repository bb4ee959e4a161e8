#include "figforge/error.hpp"

namespace figforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDuplicateId: return "duplicate-id";
    case ErrorKind::kUnknownId: return "unknown-id";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kEmptyCanvas: return "empty-canvas";
    case ErrorKind::kMalformedXml: return "malformed-xml";
    case ErrorKind::kUnknownParameter: return "unknown-parameter";
    case ErrorKind::kConstraintViolation: return "constraint-violation";
    case ErrorKind::kEvaluation: return "evaluation";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kOutOfRange: return "out-of-range";
    case ErrorKind::kVersionMismatch: return "version-mismatch";
    case ErrorKind::kCorruptFile: return "corrupt-file";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kUnknownTheme: return "unknown-theme";
    case ErrorKind::kProviderFailure: return "provider-failure";
    case ErrorKind::kBackendFailure: return "backend-failure";
    case ErrorKind::kFixtureMissing: return "fixture-missing";
    case ErrorKind::kSchemaInvalid: return "schema-invalid";
    case ErrorKind::kInvalidInvocation: return "invalid-invocation";
    case ErrorKind::kNoElementsForConcept: return "no-elements-for-concept";
    case ErrorKind::kExpansionFailure: return "expansion-failure";
    case ErrorKind::kObjectiveFailure: return "objective-failure";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace figforge
