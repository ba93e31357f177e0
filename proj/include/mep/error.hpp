#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mep {

enum class ErrorCode {
  kUnsupportedFormat,
  kMalformedContainer,
  kEmptyAudio,
  kIoFailure,
  kTooShort,
  kInvalidShape,
  kShapeMismatch,
  kNonPositiveEnergy,
  kNonPositivePeak,
  kAllZeroEnergy,
  kRescaleUndefined,
  kTooFewFrames,
  kDegenerateEmbedding,
  kInvalidConfig,
  kLengthMismatch,
  kEmptyTrialList,
};

std::string_view to_string(ErrorCode code);

/// Exception type thrown by every module. The code identifies the failure
/// class so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mep
