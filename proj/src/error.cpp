#include "logrouter/error.hpp"

namespace logrouter {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIngestionFailed: return "ingestion-failed";
    case ErrorCode::kStateFrozen: return "state-frozen";
    case ErrorCode::kInvalidTemplate: return "invalid-template";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kProviderUnavailable: return "provider-unavailable";
    case ErrorCode::kProviderContract: return "provider-contract";
    case ErrorCode::kStoreContract: return "store-contract";
    case ErrorCode::kInvalidPattern: return "invalid-pattern";
    case ErrorCode::kInvalidQuery: return "invalid-query";
    case ErrorCode::kEmptyStore: return "empty-store";
    case ErrorCode::kTermRejected: return "term-rejected";
    case ErrorCode::kGeneratorUnavailable: return "generator-unavailable";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kSqlUnparseable: return "sql-unparseable";
  }
  return "unknown";
}

}  // namespace logrouter
