#include "logrouter/ingest.hpp"

#include <cctype>
#include <fstream>

#include "logrouter/error.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::string or_unknown(const std::string& s) {
  return s.empty() ? std::string(kUnknownField) : s;
}

std::optional<Timestamp> leading_iso_timestamp(std::string_view line) {
  const auto tokens = split_whitespace(line.substr(0, 64));
  if (tokens.empty()) return std::nullopt;
  if (auto ts = parse_iso8601(tokens[0])) return ts;
  if (tokens.size() >= 2) return parse_iso8601(tokens[0] + " " + tokens[1]);
  return std::nullopt;
}

}  // namespace

SourceDescriptor SourceDescriptor::validated() const {
  if (trim(dataset).empty()) {
    throw Error(ErrorCode::kInvalidConfig, "source descriptor: dataset must be non-empty");
  }
  SourceDescriptor out = *this;
  out.namespace_ = or_unknown(namespace_);
  out.app = or_unknown(app);
  out.pod = or_unknown(pod);
  out.container = or_unknown(container);
  return out;
}

SeverityDetector::SeverityDetector() : SeverityDetector(ExceptionIndicators{}) {}

SeverityDetector::SeverityDetector(ExceptionIndicators indicators)
    : indicators_(std::move(indicators)) {
  if (!indicators_.frame_pattern.empty()) {
    frame_re_ = std::regex(indicators_.frame_pattern, std::regex::ECMAScript);
  }
}

bool SeverityDetector::has_exception_indicator(std::string_view line) const {
  for (const auto& s : indicators_.substrings) {
    if (!s.empty() && line.find(s) != std::string_view::npos) return true;
  }
  if (indicators_.frame_pattern.empty()) return false;
  return std::regex_search(line.begin(), line.end(), frame_re_);
}

Severity SeverityDetector::detect(std::string_view line) const {
  if (has_exception_indicator(line)) return Severity::kError;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && !is_word_char(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && is_word_char(line[i])) ++i;
    if (i == start) continue;
    const auto word = line.substr(start, i - start);
    if (word.size() > 8) continue;
    if (auto level = parse_severity(word); level && *level != Severity::kUnknown) {
      return *level;
    }
  }
  return Severity::kUnknown;
}

Severity detect_severity(std::string_view line) {
  static const SeverityDetector detector;
  return detector.detect(line);
}

std::optional<LogRecord> normalize_line(std::string_view raw,
                                        const SourceDescriptor& src) {
  while (!raw.empty() && (raw.back() == '\n' || raw.back() == '\r')) raw.remove_suffix(1);
  if (is_blank(raw)) return std::nullopt;

  LogRecord rec;
  rec.line = std::string(raw);
  rec.dataset = src.dataset;
  rec.namespace_ = or_unknown(src.namespace_);
  rec.app = or_unknown(src.app);
  rec.pod = or_unknown(src.pod);
  rec.container = or_unknown(src.container);
  if (src.ts_format) {
    rec.ts = parse_with_format(raw, *src.ts_format, src.default_year);
  } else {
    rec.ts = leading_iso_timestamp(raw);
    if (!rec.ts) rec.ts = parse_with_format(raw, "%b %d %H:%M:%S", src.default_year);
  }
  rec.level = detect_severity(raw);
  return rec;
}

IngestionReport ingest_lines(const std::vector<std::string>& lines,
                             const SourceDescriptor& src,
                             const RecordSink& sink,
                             std::size_t first_line_no) {
  IngestionReport report;
  for (const auto& line : lines) {
    if (auto rec = normalize_line(line, src)) {
      rec->line_no = first_line_no + report.records;
      ++report.records;
      sink(std::move(*rec));
    } else {
      ++report.dropped;
    }
  }
  return report;
}

IngestionReport ingest_file(const std::filesystem::path& path,
                            const SourceDescriptor& src,
                            const RecordSink& sink,
                            std::size_t first_line_no) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIngestionFailed, "cannot read log file: " + path.string());
  }
  IngestionReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (auto rec = normalize_line(line, src)) {
      rec->line_no = first_line_no + report.records;
      ++report.records;
      sink(std::move(*rec));
    } else {
      ++report.dropped;
    }
  }
  if (in.bad()) {
    throw Error(ErrorCode::kIngestionFailed, "read error on log file: " + path.string());
  }
  return report;
}

}  // namespace logrouter
