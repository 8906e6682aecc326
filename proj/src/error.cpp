#include "eos/error.hpp"

namespace eos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kUnknownGuardParent: return "UnknownGuardParent";
    case ErrorCode::kGuardValueOutOfParentRange: return "GuardValueOutOfParentRange";
    case ErrorCode::kUnknownSubsystem: return "UnknownSubsystem";
    case ErrorCode::kUnknownParam: return "UnknownParam";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingParentAssignment: return "MissingParentAssignment";
    case ErrorCode::kFieldCountMismatch: return "FieldCountMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kCorruptCacheFile: return "CorruptCacheFile";
    case ErrorCode::kProbeFailure: return "ProbeFailure";
    case ErrorCode::kActivationFailure: return "ActivationFailure";
    case ErrorCode::kOutOfRangeSetting: return "OutOfRangeSetting";
    case ErrorCode::kOverlapError: return "OverlapError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& message, std::size_t line) {
  std::string out(to_string(code));
  if (line != 0) {
    out += " at line " + std::to_string(line);
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(format_message(code, message, line)), code_(code), detail_(message), line_(line) {}

}  // namespace eos
