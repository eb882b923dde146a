#pragma once

#include <atomic>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "logrouter/record.hpp"

namespace logrouter {

// Lowercased, unstemmed tokens. A token is a run of [a-z0-9_.:-] with the
// separators trimmed from both ends, so IPs, hostnames, hex and error codes
// stay whole. Tokens joined by ':' or '-' also emit their parts.
std::vector<std::string> fts_tokenize(std::string_view text);

struct RecordRef {
  std::string dataset;
  std::string source_key;
  std::size_t line_no = 0;

  std::string to_string() const;
  auto operator<=>(const RecordRef&) const = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  // Require every query token instead of ranking any-token matches.
  bool strict_and = false;
};

// BM25 over an append-only document set. Ties rank by (order_key, insertion
// order) ascending.
class Bm25Index {
 public:
  struct Hit {
    std::size_t doc = 0;
    double score = 0.0;
  };

  explicit Bm25Index(Bm25Params params = {});

  std::size_t add(std::string_view text, std::size_t order_key);
  // `keep`, when set, filters candidate documents before ranking.
  std::vector<Hit> search(std::string_view query, std::size_t top_n,
                          const std::function<bool(std::size_t)>& keep = {}) const;

  std::size_t size() const { return docs_.size(); }
  const Bm25Params& params() const { return params_; }

 private:
  struct Doc {
    std::size_t order_key = 0;
    std::size_t length = 0;
  };

  Bm25Params params_;
  std::vector<Doc> docs_;
  std::size_t total_length_ = 0;
  // term -> postings of (doc, term frequency)
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>>
      postings_;
};

// Keyword backend over raw log lines.
class LineIndex {
 public:
  explicit LineIndex(Bm25Params params = {});
  LineIndex(const LineIndex&) = delete;
  LineIndex& operator=(const LineIndex&) = delete;

  void add(const LogRecord& record);

  // Empty result when the query has no tokens.
  std::vector<std::pair<RecordRef, double>> fts_search(
      std::string_view query_text, std::size_t top_n = 20,
      const std::optional<std::string>& dataset = std::nullopt) const;
  // Matching lines in corpus order, truncated to top_n. Throws
  // kInvalidPattern when the pattern does not compile.
  std::vector<RecordRef> regex_search(const std::string& pattern,
                                      std::size_t top_n,
                                      bool case_insensitive = false,
                                      const std::optional<std::string>& dataset = std::nullopt) const;

  const std::string& line(const RecordRef& ref) const;
  std::size_t size() const { return refs_.size(); }
  std::size_t access_count() const { return accesses_.load(); }

 private:
  Bm25Index bm25_;
  std::vector<RecordRef> refs_;
  std::vector<std::string> lines_;
  std::unordered_map<std::string, std::size_t> by_ref_;
  mutable std::atomic<std::size_t> accesses_{0};
};

}  // namespace logrouter
