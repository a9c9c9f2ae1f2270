#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace brickvision {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateInput,
  kOutOfFrame,
  kFormatError,
  kIoError,
  kInsufficientInliers,
  kDegenerateScatter,
  kTooSparse,
  kNoMatch,
  kAmbiguous,
  kInvalidFrame,
  kEmptyInput,
  kEmptyCrop,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (CLI, Python) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  // Pipeline stage that raised the error, empty outside the pose pipeline.
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string message_;
  std::string stage_;
};

}  // namespace brickvision
