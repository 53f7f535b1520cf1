#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mode {

enum class ErrorCode {
  InvalidArgument,
  MissingValue,
  RaggedRow,
  UnknownOutcomeColumn,
  UnparseableNumeric,
  NotContinuous,
  NameCollision,
  UnknownColumn,
  NonDiscreteColumn,
  SampleTooSmall,
  EmptyFeatureSet,
  UnknownNode,
  InvalidScm,
  EmptySupport,
  IncompatibleOutcome,
  MissingFeature,
  WrongOutcomeKind,
  UnknownFeature,
  SchemaVersionMismatch,
  CorruptFile,
  IoError,
  NotSupported,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// front ends (CLI exit codes, HTTP status mapping) can classify it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mode
