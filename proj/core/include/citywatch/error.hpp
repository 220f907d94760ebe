#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace citywatch {

enum class ErrorCode {
  InvalidArgument,
  IoFailure,
  MalformedHeader,
  MissingColumn,
  ParseFailure,
  EmptyInput,
  DegenerateSplit,
  SeriesTooShort,
  MissingValuesPresent,
  AllMissing,
  NonFiniteLoss,
  UnsupportedConfidence,
  LengthMismatch,
  AllTargetsZero,
  SchemaMismatch,
  EmptyTrainingSet,
  WidthMismatch,
  InvalidScript,
  TimeBaseMismatch,
  SinkFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace citywatch
