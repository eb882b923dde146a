#include "logrouter/chunker.hpp"

#include <algorithm>
#include <map>

#include "logrouter/error.hpp"

namespace logrouter {

using nlohmann::json;

void ChunkerParams::validate() const {
  if (window <= 0) throw Error(ErrorCode::kInvalidConfig, "chunker.window must be positive");
  if (overlap < 0) throw Error(ErrorCode::kInvalidConfig, "chunker.overlap must be non-negative");
  if (overlap >= window) {
    throw Error(ErrorCode::kInvalidConfig, "chunker.overlap must be smaller than chunker.window");
  }
}

Severity Chunk::dominant_level() const {
  static constexpr Severity kOrder[] = {Severity::kFatal, Severity::kError, Severity::kWarn,
                                        Severity::kInfo,  Severity::kDebug, Severity::kTrace};
  for (Severity s : kOrder) {
    auto it = level_histogram.find(s);
    if (it != level_histogram.end() && it->second > 0) return s;
  }
  return Severity::kUnknown;
}

std::vector<std::pair<std::size_t, std::size_t>> window_bounds(std::size_t n,
                                                               const ChunkerParams& params) {
  params.validate();
  const auto window = static_cast<std::size_t>(params.window);
  const auto step = static_cast<std::size_t>(params.window - params.overlap);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += step) {
    const std::size_t end = std::min(start + window, n);
    out.emplace_back(start, end - start);
    if (end == n) break;
  }
  return out;
}

std::vector<Chunk> chunk_records(const std::vector<LogRecord>& records,
                                 const ChunkerParams& params) {
  params.validate();
  // (dataset, source_key) in first-seen order.
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const LogRecord*>> groups;
  for (const auto& r : records) {
    auto key = std::make_pair(r.dataset, r.source_key());
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  std::vector<Chunk> out;
  for (const auto& key : order) {
    const auto& group = groups[key];
    for (auto [start, count] : window_bounds(group.size(), params)) {
      const LogRecord& first = *group[start];
      Chunk c;
      c.dataset = key.first;
      c.source_key = key.second;
      c.namespace_ = first.namespace_;
      c.app = first.app;
      c.pod = first.pod;
      c.start_line = first.line_no;
      c.line_count = count;
      c.chunk_id = c.dataset + ":" + c.source_key + ":" + std::to_string(c.start_line);
      for (std::size_t i = start; i < start + count; ++i) {
        const LogRecord& r = *group[i];
        if (i > start) c.text += '\n';
        c.text += r.line;
        ++c.level_histogram[r.level];
        if (r.ts) {
          if (!c.ts_range) {
            c.ts_range = std::make_pair(*r.ts, *r.ts);
          } else {
            c.ts_range->first = std::min(c.ts_range->first, *r.ts);
            c.ts_range->second = std::max(c.ts_range->second, *r.ts);
          }
        }
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

json chunk_to_json(const Chunk& c) {
  json hist = json::object();
  for (const auto& [level, n] : c.level_histogram) hist[std::string(severity_name(level))] = n;
  json j = {{"chunk_id", c.chunk_id},   {"dataset", c.dataset},       {"source_key", c.source_key},
            {"namespace", c.namespace_}, {"app", c.app},               {"pod", c.pod},
            {"start_line", c.start_line}, {"line_count", c.line_count}, {"text", c.text},
            {"level_histogram", hist}};
  if (c.ts_range) {
    j["ts_range"] = {format_iso8601(c.ts_range->first), format_iso8601(c.ts_range->second)};
  } else {
    j["ts_range"] = nullptr;
  }
  return j;
}

Chunk chunk_from_json(const json& j) {
  Chunk c;
  c.chunk_id = j.at("chunk_id").get<std::string>();
  c.dataset = j.at("dataset").get<std::string>();
  c.source_key = j.at("source_key").get<std::string>();
  c.namespace_ = j.value("namespace", "unknown");
  c.app = j.value("app", "unknown");
  c.pod = j.value("pod", "unknown");
  c.start_line = j.at("start_line").get<std::size_t>();
  c.line_count = j.at("line_count").get<std::size_t>();
  c.text = j.at("text").get<std::string>();
  for (const auto& [k, v] : j.at("level_histogram").items()) {
    if (auto level = parse_severity(k)) c.level_histogram[*level] = v.get<std::size_t>();
  }
  if (j.contains("ts_range") && j["ts_range"].is_array()) {
    auto a = parse_iso8601(j["ts_range"][0].get<std::string>());
    auto b = parse_iso8601(j["ts_range"][1].get<std::string>());
    if (a && b) c.ts_range = std::make_pair(*a, *b);
  }
  return c;
}

}  // namespace logrouter
