#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logrouter/router.hpp"
#include "logrouter/timestamp.hpp"

namespace logrouter {

enum class GeneratorKind { kRemote, kStub };

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::kStub;
  std::optional<std::string> endpoint;
  std::string small_model_tag = "qwen2.5:14b-instruct";
  std::string large_model_tag = "qwen3:32b";
  std::string coder_model_tag = "qwen2.5-coder:14b";
  std::chrono::milliseconds timeout{120000};
  int small_in_flight = 4;
  // The large model owns the whole GPU, so it is scheduled exclusively.
  int large_in_flight = 1;
  int coder_in_flight = 2;

  const std::string& model_for(ModelTier tier) const;
  void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

enum class GenerationTask { kAnswer, kSummary, kSql };

struct SqlHints {
  std::optional<std::string> sql_signal;  // e.g. "sql_count"
  std::vector<std::string> sql_signals;   // every sql signal that fired
  std::optional<Timestamp> reference_time;
  std::vector<std::string> templates;
  std::optional<std::string> previous_error;
};

struct GenerationRequest {
  GenerationTask task = GenerationTask::kAnswer;
  ModelTier tier = ModelTier::kSmall;
  std::string question;
  std::vector<std::string> context;
  SqlHints sql;
};

inline constexpr std::string_view kPromptVersion = "logrouter-prompts/v1";

// The full prompt sent to a remote model.
std::string render_prompt(const GenerationRequest& req);

class Generator {
 public:
  virtual ~Generator() = default;
  // Throws kGeneratorUnavailable on timeout or connection failure.
  virtual std::string generate(const GenerationRequest& req) = 0;
  virtual bool reachable() const { return true; }
};

// Deterministic offline generator.
//   answer:  "STUB[tier] evidence=<n> q=<first 6 words>"
//   summary: "MATCHES: <n>"
//   sql:     a restricted statement chosen from a rule table keyed on the
//            sql signal, severity words, time phrases and quoted literals.
class StubGenerator final : public Generator {
 public:
  std::string generate(const GenerationRequest& req) override;
};

std::string stub_answer(ModelTier tier, std::size_t evidence,
                        std::string_view question);
std::string stub_sql(const GenerationRequest& req);

// POST {endpoint}/api/generate {"model", "prompt", "stream": false} ->
// {"response": "..."}. In-flight requests are bounded per tier.
class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(GeneratorConfig cfg);

  std::string generate(const GenerationRequest& req) override;
  bool reachable() const override;

 private:
  GeneratorConfig cfg_;
  std::counting_semaphore<64> small_slots_;
  std::counting_semaphore<64> large_slots_;
  std::counting_semaphore<64> coder_slots_;
};

// LOGROUTER_GEN_URL and LOGROUTER_GEN_TIMEOUT_MS override the config.
std::shared_ptr<Generator> make_generator(GeneratorConfig cfg);

}  // namespace logrouter
