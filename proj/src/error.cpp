#include "cola/error.hpp"

namespace cola {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::LabelLengthMismatch: return "LabelLengthMismatch";
    case ErrorCode::EmptyEvent: return "EmptyEvent";
    case ErrorCode::UnlabeledSequence: return "UnlabeledSequence";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NoMask: return "NoMask";
    case ErrorCode::MultipleMasks: return "MultipleMasks";
    case ErrorCode::SpanOutOfBounds: return "SpanOutOfBounds";
    case ErrorCode::OverlappingSpans: return "OverlappingSpans";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::BackendStatus: return "BackendStatus";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::FixtureMiss: return "FixtureMiss";
    case ErrorCode::CacheConflict: return "CacheConflict";
    case ErrorCode::AllSetsEmpty: return "AllSetsEmpty";
    case ErrorCode::TooFewTexts: return "TooFewTexts";
    case ErrorCode::NoVerbFound: return "NoVerbFound";
    case ErrorCode::EmptyInterventionSet: return "EmptyInterventionSet";
    case ErrorCode::CorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::KUnknown: return "KUnknown";
    case ErrorCode::Misaligned: return "Misaligned";
    case ErrorCode::UnsupportedSequenceLength: return "UnsupportedSequenceLength";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendUnreachable:
    case ErrorCode::BackendStatus:
    case ErrorCode::MalformedResponse:
    case ErrorCode::FixtureMiss:
    case ErrorCode::CacheConflict:
      return ErrorCategory::Backend;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace cola
