#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpstruct {

// Coarse failure categories. The CLI prints them as stable tokens so that
// scripts can match on the first field of the error line.
enum class ErrorCode {
  kConfig,
  kIo,
  kData,
  kNumeric,
  kFormat,
};

[[nodiscard]] constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return "E_CONFIG";
    case ErrorCode::kIo:
      return "E_IO";
    case ErrorCode::kData:
      return "E_DATA";
    case ErrorCode::kNumeric:
      return "E_NUMERIC";
    case ErrorCode::kFormat:
      return "E_FORMAT";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a kernel matrix cannot be factorized even after jitter.
class FactorizationError : public Error {
 public:
  explicit FactorizationError(const std::string& message)
      : Error(ErrorCode::kNumeric, message) {}
};

}  // namespace gpstruct
