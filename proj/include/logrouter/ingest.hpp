#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "logrouter/record.hpp"

namespace logrouter {

inline constexpr std::string_view kUnknownField = "unknown";

// Where a stream of lines came from. Every field except `dataset` defaults to
// "unknown" rather than the empty string.
struct SourceDescriptor {
  std::string dataset;
  std::string namespace_{kUnknownField};
  std::string app{kUnknownField};
  std::string pod{kUnknownField};
  std::string container{kUnknownField};
  // strptime-like format for the line prefix (see parse_with_format). When
  // absent a leading ISO-8601 timestamp is tried, then "Jun 14 15:16:30".
  std::optional<std::string> ts_format;
  // Used when ts_format carries no year (classic syslog).
  int default_year = 1970;

  // Throws kInvalidConfig when dataset is empty; replaces empty optional
  // fields with "unknown".
  SourceDescriptor validated() const;
};

// The stack-trace heuristic: any hit forces a line's severity to ERROR.
struct ExceptionIndicators {
  std::vector<std::string> substrings{"Exception", "Traceback"};
  // Leading whitespace, "at ", then a dotted qualified name.
  std::string frame_pattern{R"(^\s+at\s+[A-Za-z_$][\w$]*(\.[\w$<>]+)+)"};
};

class SeverityDetector {
 public:
  SeverityDetector();
  explicit SeverityDetector(ExceptionIndicators indicators);

  Severity detect(std::string_view line) const;
  bool has_exception_indicator(std::string_view line) const;

 private:
  ExceptionIndicators indicators_;
  std::regex frame_re_;
};

// Uses the default exception indicator set.
Severity detect_severity(std::string_view line);

// Returns nothing for blank lines. Never throws on malformed timestamps.
std::optional<LogRecord> normalize_line(std::string_view raw,
                                        const SourceDescriptor& src);

struct IngestionReport {
  std::size_t records = 0;
  std::size_t dropped = 0;

  bool operator==(const IngestionReport&) const = default;
};

using RecordSink = std::function<void(LogRecord&&)>;

// Streams every physical line of `path` through normalize_line. line_no on the
// emitted records counts kept records, so it indexes the source stream the
// chunker sees.
IngestionReport ingest_file(const std::filesystem::path& path,
                            const SourceDescriptor& src,
                            const RecordSink& sink,
                            std::size_t first_line_no = 0);

IngestionReport ingest_lines(const std::vector<std::string>& lines,
                             const SourceDescriptor& src,
                             const RecordSink& sink,
                             std::size_t first_line_no = 0);

}  // namespace logrouter
