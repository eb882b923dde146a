#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "logrouter/timestamp.hpp"

namespace logrouter {

enum class Severity { kTrace, kDebug, kInfo, kWarn, kError, kFatal, kUnknown };

std::string_view severity_name(Severity s);
// Case-insensitive; accepts the aliases WARNING, ERR and CRITICAL.
std::optional<Severity> parse_severity(std::string_view s);

// One normalized log line in the unified schema.
struct LogRecord {
  std::optional<Timestamp> ts;
  std::string namespace_;
  std::string app;
  std::string pod;
  std::string container;
  Severity level = Severity::kUnknown;
  std::string line;

  // Position of the line within its source stream, 0-based.
  std::size_t line_no = 0;
  std::string dataset;

  // "namespace/app/pod"
  std::string source_key() const;

  bool operator==(const LogRecord&) const = default;
};

}  // namespace logrouter
