#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "logrouter/record.hpp"

namespace logrouter {

struct ChunkerParams {
  int window = 25;
  int overlap = 3;

  // Throws kInvalidConfig unless 0 <= overlap < window.
  void validate() const;
};

// A contiguous window of lines from one source.
struct Chunk {
  std::string chunk_id;  // "{dataset}:{source_key}:{start_line}"
  std::string dataset;
  std::string source_key;
  std::string namespace_;
  std::string app;
  std::string pod;
  std::size_t start_line = 0;
  std::size_t line_count = 0;
  std::string text;
  std::map<Severity, std::size_t> level_histogram;
  // Covers parseable timestamps only; absent when none parse.
  std::optional<std::pair<Timestamp, Timestamp>> ts_range;

  // Most severe level present, ignoring UNKNOWN unless nothing else occurs.
  Severity dominant_level() const;

  bool operator==(const Chunk&) const = default;
};

nlohmann::json chunk_to_json(const Chunk& c);
Chunk chunk_from_json(const nlohmann::json& j);

// Groups records by (dataset, source_key) in first-seen order and slides a
// window of `window` lines with `overlap` lines shared between neighbours.
// The trailing partial window is kept only when it adds uncovered lines.
std::vector<Chunk> chunk_records(const std::vector<LogRecord>& records,
                                 const ChunkerParams& params = {});

// Window start offsets for a stream of n lines.
std::vector<std::pair<std::size_t, std::size_t>> window_bounds(
    std::size_t n, const ChunkerParams& params);

}  // namespace logrouter
