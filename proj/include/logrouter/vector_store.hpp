#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "logrouter/chunker.hpp"
#include "logrouter/embedding.hpp"

namespace logrouter {

// Equality predicates over chunk metadata keys: namespace, app, pod, level,
// dataset. Unknown keys never match.
using MetadataFilter = std::map<std::string, std::string>;

struct VectorStoreEntry {
  Chunk chunk;
  EmbeddingVector vector;
  std::map<std::string, std::string> metadata;
};

// Exact cosine search over chunk embeddings.
class VectorStore {
 public:
  explicit VectorStore(int dim, std::string provider_tag = {});
  VectorStore(const VectorStore&) = delete;
  VectorStore& operator=(const VectorStore&) = delete;

  // Throws kStoreContract when vector.dim() differs from the store dim.
  void add(Chunk chunk, EmbeddingVector vector);

  // Descending cosine, ties by chunk_id ascending.
  std::vector<std::pair<std::string, double>> search(
      const EmbeddingVector& query, const MetadataFilter& filters = {},
      std::size_t top_n = 20) const;

  const Chunk* find(const std::string& chunk_id) const;
  const std::vector<VectorStoreEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  int dim() const { return dim_; }
  const std::string& provider_tag() const { return provider_tag_; }
  std::size_t access_count() const { return accesses_.load(); }

  // Header line {dim, provider_tag, count}, then count*dim little-endian
  // float32 values. Chunks go to the JSONL manifest in the same order.
  void save(const std::filesystem::path& vectors,
            const std::filesystem::path& manifest) const;
  void load(const std::filesystem::path& vectors,
            const std::filesystem::path& manifest);

 private:
  int dim_;
  std::string provider_tag_;
  std::vector<VectorStoreEntry> entries_;
  std::map<std::string, std::size_t> by_id_;
  mutable std::atomic<std::size_t> accesses_{0};
};

std::map<std::string, std::string> chunk_metadata(const Chunk& chunk);

}  // namespace logrouter
