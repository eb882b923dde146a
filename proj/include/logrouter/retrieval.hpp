#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "logrouter/chunker.hpp"
#include "logrouter/embedding.hpp"
#include "logrouter/keyword_index.hpp"
#include "logrouter/vector_store.hpp"

namespace logrouter {

enum class RankSource { kDense, kFts, kLiteralFts };
std::string_view rank_source_name(RankSource s);

struct RankedList {
  RankSource source = RankSource::kDense;
  // Best first, no duplicate ids.
  std::vector<std::pair<std::string, double>> items;
};

struct FusedItem {
  std::string id;
  double rrf_score = 0.0;
  std::vector<RankSource> sources;
};

struct FusedResult {
  std::vector<FusedItem> items;
  int k_rrf = 60;
};

bool chunk_passes(const Chunk& chunk, const MetadataFilter& filters);

// Maximal spans inside matching single or double quotes, in order. An
// unbalanced trailing quote is ignored.
std::vector<std::string> extract_quoted_literals(std::string_view question);

// score(id) = sum over lists containing id of 1 / (k_rrf + rank), ranks
// 1-based. Sorted by score descending, ties by id ascending.
FusedResult rrf_fuse(const std::vector<RankedList>& lists, int k_rrf = 60);

enum class RetrievalStrategy { kHybrid, kDenseOnly, kKeywordOnly };
std::string_view strategy_name(RetrievalStrategy s);
std::optional<RetrievalStrategy> parse_strategy(std::string_view s);

// Chunk texts with a BM25 index over them. Holds every chunk, including ones
// whose embedding failed.
class ChunkIndex {
 public:
  explicit ChunkIndex(Bm25Params params = {});
  ChunkIndex(const ChunkIndex&) = delete;
  ChunkIndex& operator=(const ChunkIndex&) = delete;

  void add(Chunk chunk);
  std::vector<std::pair<std::string, double>> fts_search(
      std::string_view query, std::size_t top_n,
      const MetadataFilter& filters = {}) const;
  const Chunk* find(const std::string& chunk_id) const;
  const std::vector<Chunk>& chunks() const { return chunks_; }
  std::size_t size() const { return chunks_.size(); }
  std::size_t access_count() const { return accesses_.load(); }

 private:
  Bm25Index fts_;
  std::vector<Chunk> chunks_;
  std::map<std::string, std::size_t> by_id_;
  mutable std::atomic<std::size_t> accesses_{0};
};

struct RetrievalOptions {
  RetrievalStrategy strategy = RetrievalStrategy::kHybrid;
  std::size_t top_k = 10;
  std::size_t per_backend = 20;
  int k_rrf = 60;
  MetadataFilter filters;
};

struct ScoredChunk {
  const Chunk* chunk = nullptr;
  double score = 0.0;
};

struct RetrievalResult {
  std::vector<ScoredChunk> chunks;
  std::vector<RankedList> lists;
  RetrievalStrategy strategy_used = RetrievalStrategy::kHybrid;
  bool degraded = false;
  std::string degraded_reason;
};

class Retriever {
 public:
  Retriever(const ChunkIndex& chunks, const VectorStore& vectors,
            std::shared_ptr<const EmbeddingProvider> embedder);

  // Hybrid fuses dense, chunk FTS and one literal FTS list per quoted
  // literal. When the embedding provider fails, dense and hybrid fall back
  // to keyword-only and flag the result degraded.
  RetrievalResult retrieve(std::string_view question,
                           const RetrievalOptions& opts) const;

 private:
  RankedList dense_list(std::string_view question, const RetrievalOptions& opts) const;
  RankedList fts_list(std::string_view query, RankSource source,
                      const RetrievalOptions& opts) const;

  const ChunkIndex& chunks_;
  const VectorStore& vectors_;
  std::shared_ptr<const EmbeddingProvider> embedder_;
};

}  // namespace logrouter
