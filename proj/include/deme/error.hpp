#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deme {

enum class ErrorCode {
  IndexOutOfRange,
  DuplicateId,
  RewriteFailed,
  UnitMismatch,
  IoError,
  FormatError,
  GeneratorError,
  EmptyMethod,
  PreconditionViolated,
  ControllerError,
  EmbedderError,
  ZeroVector,
  DimensionMismatch,
  NetworkDisabled,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::RewriteFailed: return "RewriteFailed";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::GeneratorError: return "GeneratorError";
    case ErrorCode::EmptyMethod: return "EmptyMethod";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::ControllerError: return "ControllerError";
    case ErrorCode::EmbedderError: return "EmbedderError";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NetworkDisabled: return "NetworkDisabled";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace deme
