#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cola {

enum class ErrorCode {
  // dataset and domain validation
  MalformedRecord,
  LabelLengthMismatch,
  EmptyEvent,
  UnlabeledSequence,
  InvalidArgument,
  Io,
  // backend protocol
  NoMask,
  MultipleMasks,
  SpanOutOfBounds,
  OverlappingSpans,
  BackendUnreachable,
  BackendStatus,
  MalformedResponse,
  FixtureMiss,
  CacheConflict,
  // pipeline stages
  AllSetsEmpty,
  TooFewTexts,
  NoVerbFound,
  EmptyInterventionSet,
  CorpusTooSmall,
  LengthMismatch,
  // evaluation
  KUnknown,
  Misaligned,
  UnsupportedSequenceLength,
};

std::string_view to_string(ErrorCode code);

/// Broad class of an error, used to pick the CLI exit code.
enum class ErrorCategory { Data, Backend };

ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Pipeline stage that raised the error; empty outside a pipeline run.
  const std::string& stage() const noexcept { return stage_; }

  /// Returns a copy tagged with `stage`; an existing tag is kept.
  Error with_stage(std::string stage) const {
    Error copy = *this;
    if (copy.stage_.empty()) copy.stage_ = std::move(stage);
    return copy;
  }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace cola
