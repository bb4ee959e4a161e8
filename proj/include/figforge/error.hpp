#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace figforge {

/// Failure classes surfaced by the library. Callers branch on these rather
/// than on message text.
enum class ErrorKind {
  kDuplicateId,
  kUnknownId,
  kInvalidArgument,
  kPrecondition,
  kEmptyCanvas,
  kMalformedXml,
  kUnknownParameter,
  kConstraintViolation,
  kEvaluation,
  kValidation,
  kOutOfRange,
  kVersionMismatch,
  kCorruptFile,
  kDimensionMismatch,
  kUnknownTheme,
  kProviderFailure,
  kBackendFailure,
  kFixtureMissing,
  kSchemaInvalid,
  kInvalidInvocation,
  kNoElementsForConcept,
  kExpansionFailure,
  kObjectiveFailure,
  kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Non-fatal diagnostics collected by best-effort operations.
using Warnings = std::vector<std::string>;

}  // namespace figforge
