#pragma once

#include <stdexcept>
#include <string>

namespace encagg {

enum class ErrorCode {
  kInvalidInput,
  kDegenerateCovariance,
  kInconsistentLabels,
  kNonFiniteLoss,
  kEmptySelection,
  kSearchFailed,
  kConfigError,
  kIoError,
};

const char* ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (notably the round pipeline) can decide whether to degrade or abort.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace encagg
