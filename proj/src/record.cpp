#include "logrouter/record.hpp"

#include "logrouter/text.hpp"

namespace logrouter {

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::kTrace: return "TRACE";
    case Severity::kDebug: return "DEBUG";
    case Severity::kInfo: return "INFO";
    case Severity::kWarn: return "WARN";
    case Severity::kError: return "ERROR";
    case Severity::kFatal: return "FATAL";
    case Severity::kUnknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::optional<Severity> parse_severity(std::string_view s) {
  const std::string u = to_upper(s);
  if (u == "TRACE") return Severity::kTrace;
  if (u == "DEBUG") return Severity::kDebug;
  if (u == "INFO") return Severity::kInfo;
  if (u == "WARN" || u == "WARNING") return Severity::kWarn;
  if (u == "ERROR" || u == "ERR") return Severity::kError;
  if (u == "FATAL" || u == "CRITICAL") return Severity::kFatal;
  if (u == "UNKNOWN") return Severity::kUnknown;
  return std::nullopt;
}

std::string LogRecord::source_key() const {
  return namespace_ + "/" + app + "/" + pod;
}

}  // namespace logrouter
