#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace logrouter {

enum class ErrorCode {
  kIngestionFailed,
  kStateFrozen,
  kInvalidTemplate,
  kInvalidConfig,
  kProviderUnavailable,
  kProviderContract,
  kStoreContract,
  kInvalidPattern,
  kInvalidQuery,
  kEmptyStore,
  kTermRejected,
  kGeneratorUnavailable,
  kInvalidInput,
  kSqlUnparseable,
};

// Stable kebab-case name used in JSON error payloads.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace logrouter
