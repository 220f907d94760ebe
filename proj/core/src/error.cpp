#include "citywatch/error.hpp"

namespace citywatch {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::MissingValuesPresent: return "MissingValuesPresent";
    case ErrorCode::AllMissing: return "AllMissing";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::UnsupportedConfidence: return "UnsupportedConfidence";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllTargetsZero: return "AllTargetsZero";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::InvalidScript: return "InvalidScript";
    case ErrorCode::TimeBaseMismatch: return "TimeBaseMismatch";
    case ErrorCode::SinkFailure: return "SinkFailure";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace citywatch
