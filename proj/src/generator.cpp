#include "logrouter/generator.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "logrouter/error.hpp"
#include "logrouter/record.hpp"
#include "logrouter/row_store.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

using nlohmann::json;

const std::string& GeneratorConfig::model_for(ModelTier tier) const {
  switch (tier) {
    case ModelTier::kSmall: return small_model_tag;
    case ModelTier::kLarge: return large_model_tag;
    case ModelTier::kCoder: return coder_model_tag;
  }
  return small_model_tag;
}

void GeneratorConfig::validate() const {
  if (kind == GeneratorKind::kRemote) {
    if (!endpoint || endpoint->empty()) {
      throw Error(ErrorCode::kInvalidConfig, "generator.endpoint is required for a remote generator");
    }
    if (small_model_tag.empty()) throw Error(ErrorCode::kInvalidConfig, "generator.small_model_tag is empty");
    if (large_model_tag.empty()) throw Error(ErrorCode::kInvalidConfig, "generator.large_model_tag is empty");
    if (coder_model_tag.empty()) throw Error(ErrorCode::kInvalidConfig, "generator.coder_model_tag is empty");
  }
  if (timeout.count() <= 0) throw Error(ErrorCode::kInvalidConfig, "generator.timeout_ms must be positive");
  auto slots = [](int v, const char* field) {
    if (v < 1 || v > 64) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string("generator.") + field + " must be in [1, 64], got " + std::to_string(v));
    }
  };
  slots(small_in_flight, "small_in_flight");
  slots(large_in_flight, "large_in_flight");
  slots(coder_in_flight, "coder_in_flight");
}

json to_json(const GeneratorConfig& c) {
  json j{{"kind", c.kind == GeneratorKind::kRemote ? "remote" : "stub"},
         {"endpoint", nullptr},
         {"small_model_tag", c.small_model_tag},
         {"large_model_tag", c.large_model_tag},
         {"coder_model_tag", c.coder_model_tag},
         {"timeout_ms", c.timeout.count()},
         {"small_in_flight", c.small_in_flight},
         {"large_in_flight", c.large_in_flight},
         {"coder_in_flight", c.coder_in_flight}};
  if (c.endpoint) j["endpoint"] = *c.endpoint;
  return j;
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c;
  try {
    std::string kind = j.value("kind", std::string("stub"));
    if (kind == "remote") {
      c.kind = GeneratorKind::kRemote;
    } else if (kind == "stub") {
      c.kind = GeneratorKind::kStub;
    } else {
      throw Error(ErrorCode::kInvalidConfig, "generator.kind must be 'remote' or 'stub', got '" + kind + "'");
    }
    if (j.contains("endpoint") && !j["endpoint"].is_null()) c.endpoint = j["endpoint"].get<std::string>();
    c.small_model_tag = j.value("small_model_tag", c.small_model_tag);
    c.large_model_tag = j.value("large_model_tag", c.large_model_tag);
    c.coder_model_tag = j.value("coder_model_tag", c.coder_model_tag);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(c.timeout.count())));
    c.small_in_flight = j.value("small_in_flight", c.small_in_flight);
    c.large_in_flight = j.value("large_in_flight", c.large_in_flight);
    c.coder_in_flight = j.value("coder_in_flight", c.coder_in_flight);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("generator: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

constexpr std::string_view kSchema =
    "Table logs_raw(ts TIMESTAMP, namespace TEXT, app TEXT, pod TEXT, container TEXT,\n"
    "  level TEXT, line TEXT, template_id TEXT, dataset TEXT)\n"
    "Allowed shapes: COUNT(*) with WHERE; column, COUNT(*) GROUP BY column ORDER BY cnt DESC\n"
    "[LIMIT k]; 100.0 * SUM(CASE WHEN ... THEN 1 ELSE 0 END) / COUNT(*).\n"
    "Predicates: col = 'x', line LIKE '%x%', ts BETWEEN 'iso' AND 'iso', joined by AND.";

std::string numbered(const std::vector<std::string>& blocks) {
  std::ostringstream out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out << "[" << (i + 1) << "]\n" << blocks[i] << "\n";
  }
  return out.str();
}

}  // namespace

std::string render_prompt(const GenerationRequest& req) {
  std::ostringstream p;
  p << "# " << kPromptVersion << "\n";
  switch (req.task) {
    case GenerationTask::kAnswer:
      p << "You are a log analysis assistant. Answer the question using only the evidence "
           "blocks below. Cite block numbers. Say so when the evidence is insufficient.\n\n";
      if (!req.context.empty()) p << "Evidence:\n" << numbered(req.context) << "\n";
      break;
    case GenerationTask::kSummary:
      p << "Summarize the matching log lines below in one line.\n\n"
        << "Lines:\n" << numbered(req.context) << "\n";
      break;
    case GenerationTask::kSql:
      p << "Write exactly one SQL statement answering the question. Return only the SQL.\n\n"
        << kSchema << "\n\n";
      if (req.sql.reference_time) p << "Current time: " << format_iso8601(*req.sql.reference_time) << "\n";
      if (!req.sql.templates.empty()) p << "Relevant log templates:\n" << numbered(req.sql.templates);
      if (!req.context.empty()) p << "Context:\n" << numbered(req.context);
      if (req.sql.previous_error) {
        p << "\nYour previous statement was rejected: " << *req.sql.previous_error << "\n";
      }
      p << "\n";
      break;
  }
  p << "Question: " << req.question << "\n";
  return p.str();
}

std::string stub_answer(ModelTier tier, std::size_t evidence, std::string_view question) {
  std::vector<std::string> words;
  for (const std::string& raw : split_whitespace(question)) {
    if (words.size() == 6) break;
    std::string w;
    for (char c : raw) {
      if (std::isalnum(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (!w.empty()) words.push_back(std::move(w));
  }
  return "STUB[" + std::string(model_tier_name(tier)) + "] evidence=" + std::to_string(evidence) +
         " q=" + join(words, " ");
}

namespace {

constexpr auto kIcase = std::regex::ECMAScript | std::regex::icase;

std::string strip_quoted(std::string_view q) {
  std::string out(q);
  for (const std::string& lit : quoted_spans(q)) {
    for (char quote : {'"', '\''}) {
      std::string needle = std::string(1, quote) + lit + std::string(1, quote);
      if (auto pos = out.find(needle); pos != std::string::npos) {
        out.replace(pos, needle.size(), " ");
        break;
      }
    }
  }
  return out;
}

std::optional<Severity> severity_in(const std::string& q) {
  static const std::regex kRe(
      R"(\b(trace|debug|info|warn|warns|warning|warnings|error|errors|err|fatal|critical)\b)", kIcase);
  std::smatch m;
  if (!std::regex_search(q, m, kRe)) return std::nullopt;
  std::string w = to_upper(m[1].str());
  if (w == "ERRORS") w = "ERROR";
  if (w == "WARNS" || w == "WARNINGS") w = "WARN";
  return parse_severity(w);
}

std::optional<TimeWindowPredicate> window_in(const std::string& q,
                                             const std::optional<Timestamp>& ref) {
  static const std::regex kIso(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(?:\.\d+)?Z?)");
  std::vector<Timestamp> stamps;
  for (auto it = std::sregex_iterator(q.begin(), q.end(), kIso); it != std::sregex_iterator(); ++it) {
    if (auto t = parse_iso8601(it->str())) stamps.push_back(*t);
  }
  if (stamps.size() >= 2) {
    return TimeWindowPredicate{std::min(stamps[0], stamps[1]), std::max(stamps[0], stamps[1])};
  }
  if (!ref) return std::nullopt;
  static const std::regex kLast(
      R"(\b(?:last|past)\s+(\d+)?\s*(minutes?|mins?|m|hours?|h|days?|d|weeks?|w)\b)", kIcase);
  std::smatch m;
  if (!std::regex_search(q, m, kLast)) return std::nullopt;
  long n = m[1].matched ? std::stol(m[1].str()) : 1;
  char unit = static_cast<char>(std::tolower(static_cast<unsigned char>(m[2].str()[0])));
  std::chrono::milliseconds span{0};
  switch (unit) {
    case 'm': span = std::chrono::minutes(n); break;
    case 'h': span = std::chrono::hours(n); break;
    case 'd': span = std::chrono::hours(24 * n); break;
    default: span = std::chrono::hours(24 * 7 * n); break;
  }
  return TimeWindowPredicate{*ref - span, *ref};
}

std::optional<Column> column_word(const std::string& w) {
  std::string v = to_lower(w);
  if (v == "level" || v == "severity") return Column::kLevel;
  if (v == "app" || v == "application" || v == "source") return Column::kApp;
  if (v == "pod") return Column::kPod;
  if (v == "namespace") return Column::kNamespace;
  if (v == "container") return Column::kContainer;
  if (v == "template") return Column::kTemplateId;
  if (v == "dataset") return Column::kDataset;
  return std::nullopt;
}

constexpr const char* kColumnWords =
    "(level|severity|app|application|pod|namespace|container|template|dataset|source)(?:s|es)?\\b";

std::optional<Column> group_column_in(const std::string& q) {
  static const std::regex kBy(std::string(R"(\b(?:by|per|for\s+each|each)\s+(?:log\s+)?)") + kColumnWords, kIcase);
  static const std::regex kTop(std::string(R"(\btop\s*-?\s*\d+\s+(?:log\s+)?)") + kColumnWords, kIcase);
  static const std::regex kMost(std::string(R"(\b(?:which|what)\s+)") + kColumnWords, kIcase);
  std::smatch m;
  for (const std::regex* re : {&kTop, &kBy, &kMost}) {
    if (std::regex_search(q, m, *re)) {
      if (auto c = column_word(m[1].str())) return c;
    }
  }
  return std::nullopt;
}

std::vector<Predicate> field_predicates(const std::string& q) {
  static const std::regex kField(R"(\b(app|pod|namespace|container|dataset)\s*[=:]\s*([\w.-]+))", kIcase);
  std::vector<Predicate> out;
  for (auto it = std::sregex_iterator(q.begin(), q.end(), kField); it != std::sregex_iterator(); ++it) {
    out.push_back(EqualsPredicate{*column_word((*it)[1].str()), (*it)[2].str()});
  }
  return out;
}

bool has(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string stub_sql(const GenerationRequest& req) {
  const std::string q = strip_quoted(req.question);
  std::vector<std::string> signals = req.sql.sql_signals;
  if (signals.empty() && req.sql.sql_signal) signals.push_back(*req.sql.sql_signal);

  std::vector<Predicate> where = field_predicates(q);
  for (const std::string& lit : quoted_spans(req.question)) {
    where.push_back(LikePredicate{Column::kLine, "%" + lit + "%"});
  }
  std::optional<Severity> level = severity_in(q);
  std::optional<TimeWindowPredicate> window = window_in(q, req.sql.reference_time);
  if (window) where.push_back(*window);

  RestrictedQuery rq;
  if (has(signals, "sql_percentage")) {
    rq.aggregation = Aggregation::kPercentage;
    rq.percentage_of.push_back(LevelPredicate{level.value_or(Severity::kError)});
    rq.where = where;
    return render_sql(rq);
  }
  if (level) where.push_back(LevelPredicate{*level});
  if (has(signals, "sql_topk") || signals.empty()) {
    static const std::regex kK(R"(\btop\s*-?\s*(\d+))", kIcase);
    std::smatch m;
    rq.aggregation = Aggregation::kTopK;
    rq.k = std::regex_search(q, m, kK) ? std::stoul(m[1].str()) : (signals.empty() ? 10 : 5);
    rq.group_column = group_column_in(q).value_or(Column::kTemplateId);
    rq.where = where;
    return render_sql(rq);
  }
  if (has(signals, "sql_groupby")) {
    rq.aggregation = Aggregation::kCountGroupBy;
    rq.group_column = group_column_in(q).value_or(Column::kLevel);
    rq.where = where;
    return render_sql(rq);
  }
  // "How often did the <x> template occur": count the best hinted template.
  static const std::regex kOneTemplate(R"(\btemplate\b)", kIcase);
  if (!req.sql.templates.empty() && std::regex_search(q, kOneTemplate)) {
    const std::string& hint = req.sql.templates.front();
    where.push_back(EqualsPredicate{Column::kTemplateId, hint.substr(0, hint.find(':'))});
  }
  rq.aggregation = Aggregation::kCount;
  rq.where = where;
  return render_sql(rq);
}

std::string StubGenerator::generate(const GenerationRequest& req) {
  switch (req.task) {
    case GenerationTask::kAnswer: return stub_answer(req.tier, req.context.size(), req.question);
    case GenerationTask::kSummary: return "MATCHES: " + std::to_string(req.context.size());
    case GenerationTask::kSql: return stub_sql(req);
  }
  return {};
}

RemoteGenerator::RemoteGenerator(GeneratorConfig cfg)
    : cfg_(std::move(cfg)),
      small_slots_(cfg_.small_in_flight),
      large_slots_(cfg_.large_in_flight),
      coder_slots_(cfg_.coder_in_flight) {
  cfg_.validate();
}

namespace {

void configure(httplib::Client& cli, std::chrono::milliseconds timeout) {
  const auto sec = timeout.count() / 1000;
  const auto usec = (timeout.count() % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

}  // namespace

std::string RemoteGenerator::generate(const GenerationRequest& req) {
  ModelTier tier = req.task == GenerationTask::kSql ? ModelTier::kCoder : req.tier;
  std::counting_semaphore<64>& slots =
      tier == ModelTier::kLarge ? large_slots_ : tier == ModelTier::kCoder ? coder_slots_ : small_slots_;
  slots.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{slots};

  httplib::Client cli(*cfg_.endpoint);
  configure(cli, cfg_.timeout);
  const json body = {{"model", cfg_.model_for(tier)}, {"prompt", render_prompt(req)}, {"stream", false}};
  auto res = cli.Post("/api/generate", body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kGeneratorUnavailable,
                "generator endpoint " + *cfg_.endpoint + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kGeneratorUnavailable, "generator endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body).at("response").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kGeneratorUnavailable, std::string("malformed generator response: ") + e.what());
  }
}

bool RemoteGenerator::reachable() const {
  httplib::Client cli(*cfg_.endpoint);
  configure(cli, std::min(cfg_.timeout, std::chrono::milliseconds(2000)));
  return static_cast<bool>(cli.Get("/"));
}

std::shared_ptr<Generator> make_generator(GeneratorConfig cfg) {
  if (const char* url = std::getenv("LOGROUTER_GEN_URL"); url && *url) {
    cfg.kind = GeneratorKind::kRemote;
    cfg.endpoint = url;
  }
  if (const char* ms = std::getenv("LOGROUTER_GEN_TIMEOUT_MS"); ms && *ms) {
    try {
      cfg.timeout = std::chrono::milliseconds(std::stoll(ms));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, std::string("LOGROUTER_GEN_TIMEOUT_MS is not an integer: ") + ms);
    }
  }
  cfg.validate();
  if (cfg.kind == GeneratorKind::kRemote) return std::make_shared<RemoteGenerator>(std::move(cfg));
  return std::make_shared<StubGenerator>();
}

}  // namespace logrouter
