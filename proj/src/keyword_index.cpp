#include "logrouter/keyword_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <unordered_set>

#include "logrouter/error.hpp"

namespace logrouter {

namespace {

bool is_token_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '.' || c == ':' || c == '-';
}

bool is_edge_separator(char c) { return c == '.' || c == ':' || c == '-'; }

std::string trim_separators(std::string s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_edge_separator(s[b])) ++b;
  while (e > b && is_edge_separator(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::vector<std::string> fts_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string tok = trim_separators(std::move(cur));
    cur.clear();
    if (tok.empty()) return;
    const bool compound = tok.find_first_of(":-") != std::string::npos;
    out.push_back(tok);
    if (!compound) return;
    std::size_t start = 0;
    while (start <= tok.size()) {
      std::size_t sep = tok.find_first_of(":-", start);
      if (sep == std::string::npos) sep = tok.size();
      std::string part = trim_separators(tok.substr(start, sep - start));
      if (!part.empty()) out.push_back(std::move(part));
      start = sep + 1;
    }
  };
  for (char c : text) {
    if (is_token_char(c)) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string RecordRef::to_string() const {
  return dataset + ":" + source_key + ":" + std::to_string(line_no);
}

Bm25Index::Bm25Index(Bm25Params params) : params_(params) {}

std::size_t Bm25Index::add(std::string_view text, std::size_t order_key) {
  const std::size_t doc = docs_.size();
  const auto tokens = fts_tokenize(text);
  std::unordered_map<std::string, std::size_t> tf;
  for (const auto& t : tokens) ++tf[t];
  for (auto& [term, n] : tf) postings_[term].emplace_back(doc, n);
  docs_.push_back({order_key, tokens.size()});
  total_length_ += tokens.size();
  return doc;
}

std::vector<Bm25Index::Hit> Bm25Index::search(std::string_view query, std::size_t top_n,
                                              const std::function<bool(std::size_t)>& keep) const {
  std::vector<std::string> terms;
  {
    std::unordered_set<std::string> seen;
    for (auto& t : fts_tokenize(query)) {
      if (seen.insert(t).second) terms.push_back(std::move(t));
    }
  }
  if (terms.empty() || docs_.empty() || top_n == 0) return {};

  const double n_docs = static_cast<double>(docs_.size());
  const double avgdl = static_cast<double>(total_length_) / n_docs;
  std::unordered_map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (auto [doc, tf] : it->second) {
      if (keep && !keep(doc)) continue;
      const double dl = static_cast<double>(docs_[doc].length);
      const double f = static_cast<double>(tf);
      const double norm = f + params_.k1 * (1.0 - params_.b + params_.b * dl / (avgdl > 0 ? avgdl : 1.0));
      auto& slot = acc[doc];
      slot.first += idf * f * (params_.k1 + 1.0) / norm;
      ++slot.second;
    }
  }
  std::vector<Hit> hits;
  hits.reserve(acc.size());
  for (auto& [doc, sc] : acc) {
    if (params_.strict_and && sc.second != terms.size()) continue;
    hits.push_back({doc, sc.first});
  }
  std::sort(hits.begin(), hits.end(), [this](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (docs_[a.doc].order_key != docs_[b.doc].order_key)
      return docs_[a.doc].order_key < docs_[b.doc].order_key;
    return a.doc < b.doc;
  });
  if (hits.size() > top_n) hits.resize(top_n);
  return hits;
}

LineIndex::LineIndex(Bm25Params params) : bm25_(params) {}

void LineIndex::add(const LogRecord& record) {
  RecordRef ref{record.dataset, record.source_key(), record.line_no};
  by_ref_[ref.to_string()] = refs_.size();
  bm25_.add(record.line, record.line_no);
  refs_.push_back(std::move(ref));
  lines_.push_back(record.line);
}

std::vector<std::pair<RecordRef, double>> LineIndex::fts_search(
    std::string_view query_text, std::size_t top_n, const std::optional<std::string>& dataset) const {
  ++accesses_;
  std::function<bool(std::size_t)> keep;
  if (dataset) keep = [&](std::size_t doc) { return refs_[doc].dataset == *dataset; };
  std::vector<std::pair<RecordRef, double>> out;
  for (const auto& hit : bm25_.search(query_text, top_n, keep)) {
    out.emplace_back(refs_[hit.doc], hit.score);
  }
  return out;
}

std::vector<RecordRef> LineIndex::regex_search(const std::string& pattern, std::size_t top_n,
                                               bool case_insensitive,
                                               const std::optional<std::string>& dataset) const {
  ++accesses_;
  std::regex re;
  try {
    auto flags = std::regex::ECMAScript;
    if (case_insensitive) flags |= std::regex::icase;
    re = std::regex(pattern, flags);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kInvalidPattern, "invalid pattern '" + pattern + "': " + e.what());
  }
  std::vector<RecordRef> out;
  for (std::size_t i = 0; i < lines_.size() && out.size() < top_n; ++i) {
    if (dataset && refs_[i].dataset != *dataset) continue;
    if (std::regex_search(lines_[i], re)) out.push_back(refs_[i]);
  }
  return out;
}

const std::string& LineIndex::line(const RecordRef& ref) const {
  auto it = by_ref_.find(ref.to_string());
  if (it == by_ref_.end()) throw Error(ErrorCode::kInvalidQuery, "unknown record " + ref.to_string());
  return lines_[it->second];
}

}  // namespace logrouter
