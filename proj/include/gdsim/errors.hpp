#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gdsim {

enum class ErrorCode {
  DuplicateName,
  TooManyTypes,
  IllegalHintCombination,
  UnknownName,
  UnknownAgentType,
  TypeNotWritable,
  TypeNotReadable,
  HintViolation,
  IndexOverflow,
  IndexOutOfBounds,
  ContractViolation,
  ParamFrozen,
  MidStepMutation,
  DuplicateRasterName,
  InvalidArgument,
  InvalidState,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::TooManyTypes: return "TooManyTypes";
    case ErrorCode::IllegalHintCombination: return "IllegalHintCombination";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::UnknownAgentType: return "UnknownAgentType";
    case ErrorCode::TypeNotWritable: return "TypeNotWritable";
    case ErrorCode::TypeNotReadable: return "TypeNotReadable";
    case ErrorCode::HintViolation: return "HintViolation";
    case ErrorCode::IndexOverflow: return "IndexOverflow";
    case ErrorCode::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::ContractViolation: return "ContractViolation";
    case ErrorCode::ParamFrozen: return "ParamFrozen";
    case ErrorCode::MidStepMutation: return "MidStepMutation";
    case ErrorCode::DuplicateRasterName: return "DuplicateRasterName";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidState: return "InvalidState";
  }
  return "Unknown";
}

// Every error raised by the library carries a code so callers (and tests)
// can branch on the failure kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace gdsim
