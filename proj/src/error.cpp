#include "brickvision/error.hpp"

namespace brickvision {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kOutOfFrame: return "OutOfFrame";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInsufficientInliers: return "InsufficientInliers";
    case ErrorCode::kDegenerateScatter: return "DegenerateScatter";
    case ErrorCode::kTooSparse: return "TooSparse";
    case ErrorCode::kNoMatch: return "NoMatch";
    case ErrorCode::kAmbiguous: return "Ambiguous";
    case ErrorCode::kInvalidFrame: return "InvalidFrame";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyCrop: return "EmptyCrop";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error((stage.empty() ? std::string() : stage + ": ") +
                         std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message),
      stage_(std::move(stage)) {}

Error Error::with_stage(std::string stage) const { return Error(code_, message_, std::move(stage)); }

}  // namespace brickvision
