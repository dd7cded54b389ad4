#include "kpirefine/error.hpp"

namespace kpirefine {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::NoSuchPath: return "NoSuchPath";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::AllScoresMissing: return "AllScoresMissing";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingleClassPool: return "SingleClassPool";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace kpirefine
