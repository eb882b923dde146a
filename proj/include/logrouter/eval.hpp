#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logrouter/embedding.hpp"
#include "logrouter/engine.hpp"

namespace logrouter {

struct QuestionRecord {
  std::string id;
  std::string dataset;
  std::string question;
  RoutePath gold_route = RoutePath::kSemantic;
  std::string reference_answer;
  std::optional<std::string> reference_text;
  bool synthetic = false;
};

// JSONL, one record per line. Throws kInvalidInput on duplicate ids, unknown
// routes or malformed lines (the message carries the line number).
std::vector<QuestionRecord> load_questions(const std::filesystem::path& path);
QuestionRecord question_from_json(const nlohmann::json& j);

// Label order of the confusion matrix.
inline constexpr std::array<RoutePath, 3> kEvalClasses = {RoutePath::kKeyword, RoutePath::kSemantic,
                                                          RoutePath::kSql};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct RoutingMetrics {
  double accuracy = 0.0;
  std::map<RoutePath, ClassMetrics> per_class;
  // confusion[gold][predicted] in kEvalClasses order.
  std::array<std::array<std::size_t, 3>, 3> confusion{};
  std::size_t n = 0;
};

// Labels must be keyword, semantic or sql; throws kInvalidInput on a length
// mismatch or any other label. Precision is 0 for a class never predicted.
RoutingMetrics routing_metrics(const std::vector<RoutePath>& gold,
                               const std::vector<RoutePath>& predicted);

// Unigram F1 over lowercase alphanumeric tokens with multiset overlap.
double rouge1_f1(std::string_view candidate, std::string_view reference);

struct RetrievalSample {
  // Retrieved texts, best first.
  std::vector<std::string> ranked;
  std::string reference;
  // Reference-bearing items in the whole corpus.
  std::size_t bearing_total = 0;
};

struct RetrievalMetrics {
  double hit_at_k = 0.0;
  double recall_at_k = 0.0;
  double mrr = 0.0;
  std::size_t k = 10;
  std::size_t n = 0;
};

struct RetrievalScore {
  double hit = 0.0;
  double recall = 0.0;
  double reciprocal_rank = 0.0;
};

RetrievalScore score_retrieval(const RetrievalSample& s, std::size_t k);
RetrievalMetrics retrieval_metrics(const std::vector<RetrievalSample>& samples, std::size_t k = 10);

// Absent when either side is empty or the provider fails.
std::optional<double> cosine_answer_similarity(std::string_view candidate, std::string_view reference,
                                               const EmbeddingProvider& provider);

struct LatencyStats {
  double mean = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  std::size_t n = 0;
};

// Nearest-rank percentiles.
LatencyStats latency_stats(std::vector<double> values);

enum class EvalMode { kOnline, kOffline };

struct EvalOptions {
  Ablation condition = Ablation::kFull;
  EvalMode mode = EvalMode::kOnline;
  // Offline mode: the dataset file is <data_root>/<dataset>.log.
  std::filesystem::path data_root;
  RetrievalStrategy offline_strategy = RetrievalStrategy::kHybrid;
  std::size_t k = 10;
  std::uint64_t seed = 20240601;
  std::optional<std::filesystem::path> out_dir;
};

struct EvalError {
  std::string id;
  std::string message;
};

struct MetricsReport {
  Ablation condition = Ablation::kFull;
  EvalMode mode = EvalMode::kOnline;
  std::size_t n = 0;
  RoutingMetrics routing;
  std::optional<double> mean_cosine;
  std::optional<double> mean_rouge1_f1;
  std::size_t cosine_coverage = 0;
  std::size_t rouge_coverage = 0;
  RetrievalMetrics retrieval;
  std::map<std::string, LatencyStats> latency;
  std::vector<EvalError> errors;
  // One line per question, byte-stable for a fixed seed.
  std::vector<nlohmann::json> details;
  std::vector<nlohmann::json> latency_details;
};

nlohmann::json to_json(const MetricsReport& r);
std::string render_markdown(const MetricsReport& r);

// Replays every question and aggregates. With out_dir set, writes
// report.json, report.md, details.jsonl and latencies.jsonl there.
MetricsReport run_eval(Engine& engine, const std::vector<QuestionRecord>& questions,
                       const EvalOptions& opts);

}  // namespace logrouter
