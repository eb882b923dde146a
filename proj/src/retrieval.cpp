#include "logrouter/retrieval.hpp"

#include <algorithm>
#include <map>

#include "logrouter/error.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

std::string_view rank_source_name(RankSource s) {
  switch (s) {
    case RankSource::kDense: return "dense";
    case RankSource::kFts: return "fts";
    case RankSource::kLiteralFts: return "literal_fts";
  }
  return "dense";
}

std::vector<std::string> extract_quoted_literals(std::string_view question) {
  return quoted_spans(question);
}

FusedResult rrf_fuse(const std::vector<RankedList>& lists, int k_rrf) {
  std::map<std::string, FusedItem> acc;
  for (const RankedList& list : lists) {
    for (std::size_t r = 0; r < list.items.size(); ++r) {
      FusedItem& item = acc[list.items[r].first];
      item.id = list.items[r].first;
      item.rrf_score += 1.0 / (static_cast<double>(k_rrf) + static_cast<double>(r + 1));
      item.sources.push_back(list.source);
    }
  }
  FusedResult out;
  out.k_rrf = k_rrf;
  out.items.reserve(acc.size());
  for (auto& [id, item] : acc) out.items.push_back(std::move(item));
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const FusedItem& a, const FusedItem& b) {
                     if (a.rrf_score != b.rrf_score) return a.rrf_score > b.rrf_score;
                     return a.id < b.id;
                   });
  return out;
}

std::string_view strategy_name(RetrievalStrategy s) {
  switch (s) {
    case RetrievalStrategy::kHybrid: return "hybrid";
    case RetrievalStrategy::kDenseOnly: return "dense_only";
    case RetrievalStrategy::kKeywordOnly: return "keyword_only";
  }
  return "hybrid";
}

std::optional<RetrievalStrategy> parse_strategy(std::string_view s) {
  std::string v = to_lower(trim(s));
  std::replace(v.begin(), v.end(), '-', '_');
  if (v == "hybrid") return RetrievalStrategy::kHybrid;
  if (v == "dense_only" || v == "dense") return RetrievalStrategy::kDenseOnly;
  if (v == "keyword_only" || v == "keyword") return RetrievalStrategy::kKeywordOnly;
  return std::nullopt;
}

bool chunk_passes(const Chunk& chunk, const MetadataFilter& filters) {
  if (filters.empty()) return true;
  auto meta = chunk_metadata(chunk);
  for (const auto& [k, v] : filters) {
    auto it = meta.find(k);
    if (it == meta.end() || it->second != v) return false;
  }
  return true;
}

ChunkIndex::ChunkIndex(Bm25Params params) : fts_(params) {}

void ChunkIndex::add(Chunk chunk) {
  if (by_id_.count(chunk.chunk_id)) return;
  fts_.add(chunk.text, chunks_.size());
  by_id_[chunk.chunk_id] = chunks_.size();
  chunks_.push_back(std::move(chunk));
}

std::vector<std::pair<std::string, double>> ChunkIndex::fts_search(
    std::string_view query, std::size_t top_n, const MetadataFilter& filters) const {
  ++accesses_;
  std::function<bool(std::size_t)> keep;
  if (!filters.empty()) {
    keep = [&](std::size_t doc) { return chunk_passes(chunks_[doc], filters); };
  }
  std::vector<std::pair<std::string, double>> out;
  for (const Bm25Index::Hit& h : fts_.search(query, top_n, keep)) {
    out.emplace_back(chunks_[h.doc].chunk_id, h.score);
  }
  return out;
}

const Chunk* ChunkIndex::find(const std::string& chunk_id) const {
  auto it = by_id_.find(chunk_id);
  return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

Retriever::Retriever(const ChunkIndex& chunks, const VectorStore& vectors,
                     std::shared_ptr<const EmbeddingProvider> embedder)
    : chunks_(chunks), vectors_(vectors), embedder_(std::move(embedder)) {}

RankedList Retriever::dense_list(std::string_view question,
                                 const RetrievalOptions& opts) const {
  if (!embedder_) throw Error(ErrorCode::kProviderUnavailable, "no embedding provider");
  EmbeddingVector q = embedder_->embed(question);
  RankedList list;
  list.source = RankSource::kDense;
  list.items = vectors_.search(q, opts.filters, opts.per_backend);
  return list;
}

RankedList Retriever::fts_list(std::string_view query, RankSource source,
                               const RetrievalOptions& opts) const {
  RankedList list;
  list.source = source;
  list.items = chunks_.fts_search(query, opts.per_backend, opts.filters);
  return list;
}

RetrievalResult Retriever::retrieve(std::string_view question,
                                    const RetrievalOptions& opts) const {
  RetrievalResult res;
  res.strategy_used = opts.strategy;

  auto take = [&](const std::vector<std::pair<std::string, double>>& items) {
    for (const auto& [id, score] : items) {
      if (res.chunks.size() >= opts.top_k) break;
      const Chunk* c = chunks_.find(id);
      if (!c) c = vectors_.find(id);
      if (c) res.chunks.push_back({c, score});
    }
  };

  std::optional<RankedList> dense;
  if (opts.strategy != RetrievalStrategy::kKeywordOnly) {
    try {
      dense = dense_list(question, opts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProviderUnavailable &&
          e.code() != ErrorCode::kProviderContract &&
          e.code() != ErrorCode::kStoreContract) {
        throw;
      }
      res.degraded = true;
      res.degraded_reason = std::string("embedding unavailable: ") + e.what();
      res.strategy_used = RetrievalStrategy::kKeywordOnly;
    }
  }

  if (res.strategy_used == RetrievalStrategy::kKeywordOnly) {
    res.lists.push_back(fts_list(question, RankSource::kFts, opts));
    take(res.lists.back().items);
    return res;
  }
  if (res.strategy_used == RetrievalStrategy::kDenseOnly) {
    res.lists.push_back(std::move(*dense));
    take(res.lists.back().items);
    return res;
  }

  res.lists.push_back(std::move(*dense));
  res.lists.push_back(fts_list(question, RankSource::kFts, opts));
  for (const std::string& lit : extract_quoted_literals(question)) {
    res.lists.push_back(fts_list(lit, RankSource::kLiteralFts, opts));
  }
  FusedResult fused = rrf_fuse(res.lists, opts.k_rrf);
  std::vector<std::pair<std::string, double>> items;
  items.reserve(fused.items.size());
  for (const FusedItem& f : fused.items) items.emplace_back(f.id, f.rrf_score);
  take(items);
  return res;
}

}  // namespace logrouter
