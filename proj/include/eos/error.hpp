#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace eos {

enum class ErrorCode {
  kDuplicateName,
  kInvalidRange,
  kUnknownGuardParent,
  kGuardValueOutOfParentRange,
  kUnknownSubsystem,
  kUnknownParam,
  kParseError,
  kMissingParentAssignment,
  kFieldCountMismatch,
  kIoError,
  kCorruptCacheFile,
  kProbeFailure,
  kActivationFailure,
  kOutOfRangeSetting,
  kOverlapError,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
// `line` is 1-based and only meaningful for errors raised while parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  // Message without the code/line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::size_t line_;
};

}  // namespace eos
