#include "mode/error.hpp"

namespace mode {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::UnknownOutcomeColumn: return "UnknownOutcomeColumn";
    case ErrorCode::UnparseableNumeric: return "UnparseableNumeric";
    case ErrorCode::NotContinuous: return "NotContinuous";
    case ErrorCode::NameCollision: return "NameCollision";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::NonDiscreteColumn: return "NonDiscreteColumn";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::InvalidScm: return "InvalidScm";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::IncompatibleOutcome: return "IncompatibleOutcome";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::WrongOutcomeKind: return "WrongOutcomeKind";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotSupported: return "NotSupported";
  }
  return "Unknown";
}

}  // namespace mode
