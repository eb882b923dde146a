#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logrouter/chunker.hpp"
#include "logrouter/drain.hpp"
#include "logrouter/embedding.hpp"
#include "logrouter/generator.hpp"
#include "logrouter/ingest.hpp"
#include "logrouter/keyword_index.hpp"
#include "logrouter/retrieval.hpp"
#include "logrouter/router.hpp"
#include "logrouter/row_store.hpp"
#include "logrouter/tracing.hpp"
#include "logrouter/vector_store.hpp"

namespace logrouter {

enum class Ablation {
  kFull,
  kNoL1,
  kNoL2,
  kNoRouting,
  kSemanticOnly,
  kKeywordOnly,
  kHybrid,
  kAlwaysLarge,
  kNoDrain,
};

std::string_view ablation_name(Ablation a);
// Accepts hyphen or underscore spellings ("no-l2", "no_l2"). Throws
// kInvalidConfig for anything else.
Ablation parse_ablation(std::string_view s);
const std::vector<Ablation>& all_ablations();

// The knobs an ablation can turn.
struct PipelineConfig {
  RouterConfig router;
  RetrievalStrategy strategy = RetrievalStrategy::kHybrid;
  std::optional<RoutePath> forced_path;
  std::optional<ModelTier> forced_tier;
  bool templates_visible = true;
};

PipelineConfig apply_ablation(Ablation condition, PipelineConfig base);

struct EngineConfig {
  ChunkerParams chunker;
  DrainParams drain;
  EmbeddingProviderConfig embedding;
  GeneratorConfig generator;
  RouterConfig router;
  RetrievalStrategy strategy = RetrievalStrategy::kHybrid;
  std::size_t top_k = 10;
  std::size_t per_backend = 20;
  int k_rrf = 60;
  // Matched lines returned verbatim by the keyword path.
  std::size_t keyword_top_n = 20;
  // One-line small-model summary after keyword matches.
  bool keyword_summary = true;
  Ablation ablation = Ablation::kFull;
  // Seeds trace ids for reproducible runs; random when absent.
  std::optional<std::uint64_t> trace_seed;
  std::optional<std::filesystem::path> trace_log;
};

struct EvidenceItem {
  std::string id;
  std::string text;
  double score = 0.0;
};

struct QueryResponse {
  std::string question;
  std::string answer;
  L1Decision route;
  std::optional<L2Decision> l2;
  ModelTier tier = ModelTier::kSmall;
  std::vector<EvidenceItem> evidence;
  std::optional<std::string> sql_text;
  std::map<std::string, double> latencies;
  std::map<std::string, Timestamp> stage_starts;
  std::string trace_id;
  bool degraded = false;
  std::string degraded_reason;
  Ablation ablation = Ablation::kFull;
  RetrievalStrategy strategy = RetrievalStrategy::kHybrid;
  // Templates handed to the SQL generator.
  std::vector<std::string> sql_templates;
  std::optional<std::string> rejected_term;
};

nlohmann::json to_json(const QueryResponse& r);

struct QueryOptions {
  std::optional<Ablation> ablation;
  std::optional<RetrievalStrategy> strategy;
  std::optional<std::string> dataset;
};

struct Explanation {
  L1Decision route;
  L2Decision l2;
  ModelTier tier = ModelTier::kSmall;
  std::optional<std::string> rejected_term;
};

nlohmann::json to_json(const Explanation& e);

struct IngestSummary {
  IngestionReport report;
  std::size_t chunks = 0;
  std::size_t embedded = 0;
  std::size_t embed_failures = 0;
  std::size_t templates = 0;
  std::string embed_error;
};

nlohmann::json to_json(const IngestSummary& s);

struct IndexCounts {
  std::size_t records = 0;
  std::size_t chunks = 0;
  std::size_t vectors = 0;
  std::size_t templates = 0;
};

struct AccessCounts {
  std::size_t lines = 0;
  std::size_t chunks = 0;
  std::size_t vectors = 0;
  std::size_t rows = 0;
  bool operator==(const AccessCounts&) const = default;
};

// Indexing pipeline plus query-time orchestration over the four paths.
// Ingest takes the write lock; queries share the read lock.
class Engine {
 public:
  Engine(EngineConfig cfg, std::shared_ptr<EmbeddingProvider> embedder,
         std::shared_ptr<Generator> generator,
         std::shared_ptr<TraceSink> traces = nullptr,
         SignalVocabulary vocab = SignalVocabulary::builtin());

  // Providers built from the config (environment overrides apply).
  // The vocabulary comes from `vocab_path`, else LOGROUTER_VOCAB, else the
  // built-in file.
  static std::unique_ptr<Engine> create(
      EngineConfig cfg, std::shared_ptr<TraceSink> traces = nullptr,
      const std::optional<std::filesystem::path>& vocab_path = std::nullopt);

  IngestSummary ingest_file(const std::filesystem::path& path, const SourceDescriptor& src);
  IngestSummary ingest_lines(const std::vector<std::string>& lines, const SourceDescriptor& src);
  IngestSummary ingest_records(std::vector<LogRecord> records);

  // Freezes the miner; later ingests annotate without training.
  void freeze_drain();
  bool drain_frozen() const;
  void set_drain(DrainMiner miner);

  QueryResponse answer_query(std::string_view question, const QueryOptions& opts = {});
  // Route decisions only. Touches no index and writes no trace.
  Explanation explain(std::string_view question, const QueryOptions& opts = {}) const;

  std::vector<Template> templates() const;
  IndexCounts counts() const;
  AccessCounts access_counts() const;
  nlohmann::json health() const;
  // Chunks whose text contains `needle`; not counted as an index access.
  std::size_t count_chunks_containing(std::string_view needle,
                                      const std::optional<std::string>& dataset = std::nullopt) const;

  const EngineConfig& config() const { return cfg_; }
  const SignalVocabulary& vocabulary() const { return vocab_; }
  std::shared_ptr<EmbeddingProvider> embedder() const { return embedder_; }
  std::shared_ptr<Generator> generator() const { return generator_; }
  void set_generator(std::shared_ptr<Generator> g);

  // Snapshot directory: drain.json, rows.ndjson, chunks.jsonl, vectors.bin,
  // vectors.jsonl, meta.json.
  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

 private:
  struct Context;

  IngestSummary ingest_locked(std::vector<LogRecord> records);
  void run_general(Context& ctx);
  void run_keyword(Context& ctx);
  void run_sql(Context& ctx);
  void run_semantic(Context& ctx);
  std::vector<std::string> lookup_templates(Context& ctx);
  PipelineConfig pipeline_for(const QueryOptions& opts) const;
  void rebuild_row_keys();

  EngineConfig cfg_;
  SignalVocabulary vocab_;
  std::shared_ptr<EmbeddingProvider> embedder_;
  std::shared_ptr<Generator> generator_;
  std::shared_ptr<TraceSink> traces_;
  std::unique_ptr<TraceIdSource> trace_ids_;

  mutable std::shared_mutex mu_;
  DrainMiner miner_;
  std::vector<LogRecord> records_;
  std::unique_ptr<LineIndex> lines_;
  std::unique_ptr<RowStore> rows_;
  std::unique_ptr<ChunkIndex> chunks_;
  std::unique_ptr<VectorStore> vectors_;
  std::map<std::string, std::size_t> next_line_;
  std::map<std::string, std::size_t> row_by_key_;
};

}  // namespace logrouter
