#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logrouter/timestamp.hpp"

namespace logrouter {

namespace stage {
inline constexpr std::string_view kL1Route = "l1_route";
inline constexpr std::string_view kL2Route = "l2_route";
inline constexpr std::string_view kKeywordSearch = "keyword_search";
inline constexpr std::string_view kSemanticSearch = "semantic_search";
inline constexpr std::string_view kSqlTemplateLookup = "sql_template_lookup";
inline constexpr std::string_view kSqlTemplateFallback = "sql_template_fallback";
inline constexpr std::string_view kSqlGenerate = "sql_generate";
inline constexpr std::string_view kSqlExecute = "sql_execute";
inline constexpr std::string_view kLlmGenerate = "llm_generate";
inline constexpr std::string_view kTotal = "total";
}  // namespace stage

enum class StageOutcome { kOk, kError, kDegraded };
std::string_view outcome_name(StageOutcome o);

struct StageTrace {
  std::string trace_id;
  std::string stage;
  Timestamp started;
  double duration_ms = 0.0;
  StageOutcome outcome = StageOutcome::kOk;
};

nlohmann::json to_json(const StageTrace& t);

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void write(const StageTrace& trace) = 0;
};

// Newline-delimited JSON, appended.
class FileTraceSink final : public TraceSink {
 public:
  explicit FileTraceSink(const std::filesystem::path& path);
  void write(const StageTrace& trace) override;

 private:
  std::mutex mu_;
  std::ofstream out_;
};

class MemoryTraceSink final : public TraceSink {
 public:
  void write(const StageTrace& trace) override;
  std::vector<StageTrace> snapshot() const;
  std::vector<StageTrace> for_trace(const std::string& trace_id) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<StageTrace> traces_;
};

// UUID v4 strings. Seeded sources are reproducible; the default draws from
// std::random_device.
class TraceIdSource {
 public:
  TraceIdSource();
  explicit TraceIdSource(std::uint64_t seed);
  std::string next();

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

bool is_uuid_v4(std::string_view s);

// Per-request stage timer. Each finished stage is written to the sink and
// recorded in latencies().
class RequestTrace {
 public:
  RequestTrace(std::string trace_id, TraceSink* sink);

  class Span {
   public:
    Span(RequestTrace& owner, std::string_view stage);
    Span(const Span&) = delete;
    Span& operator=(const Span&) = delete;
    ~Span();
    void set_outcome(StageOutcome o) { outcome_ = o; }

   private:
    RequestTrace& owner_;
    std::string stage_;
    Timestamp started_;
    std::chrono::steady_clock::time_point start_;
    StageOutcome outcome_ = StageOutcome::kOk;
  };

  Span span(std::string_view stage) { return Span(*this, stage); }
  void record(std::string_view stage, Timestamp started, double duration_ms,
              StageOutcome outcome);

  const std::string& trace_id() const { return trace_id_; }
  const std::map<std::string, double>& latencies() const { return latencies_; }
  const std::map<std::string, Timestamp>& starts() const { return starts_; }

 private:
  std::string trace_id_;
  TraceSink* sink_;
  std::map<std::string, double> latencies_;
  std::map<std::string, Timestamp> starts_;
};

}  // namespace logrouter
