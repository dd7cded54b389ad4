#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kpirefine {

enum class ErrorCode {
  InvalidArgument,
  DuplicateNode,
  UnknownNode,
  SelfLoop,
  DuplicateEdge,
  CycleDetected,
  Overflow,
  NoSuchPath,
  EmptyInput,
  DimensionMismatch,
  DegenerateWeights,
  AllScoresMissing,
  NonFinite,
  SingleClassPool,
  Parse,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  // what() is "<code>: <message>".
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace kpirefine
