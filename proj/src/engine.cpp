#include "logrouter/engine.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>

#include "logrouter/error.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

using nlohmann::json;

namespace {

constexpr std::string_view kGeneratorDown =
    "Service unavailable: the answer generator could not be reached.";
constexpr std::string_view kSqlDown =
    "Service unavailable: the SQL backend could not answer this question.";

struct AblationName {
  Ablation value;
  std::string_view name;
};

constexpr AblationName kAblations[] = {
    {Ablation::kFull, "full"},
    {Ablation::kNoL1, "no_l1"},
    {Ablation::kNoL2, "no_l2"},
    {Ablation::kNoRouting, "no_routing"},
    {Ablation::kSemanticOnly, "semantic_only"},
    {Ablation::kKeywordOnly, "keyword_only"},
    {Ablation::kHybrid, "hybrid"},
    {Ablation::kAlwaysLarge, "always_large"},
    {Ablation::kNoDrain, "no_drain"},
};

std::string row_key(const std::string& dataset, const std::string& source_key, std::size_t line_no) {
  return dataset + '\x1f' + source_key + '\x1f' + std::to_string(line_no);
}

std::string source_stream(const std::string& dataset, const std::string& source_key) {
  return dataset + '\x1f' + source_key;
}

Timestamp now_ms() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

// Words that phrase an aggregation rather than name what is being counted.
const std::set<std::string>& sql_phrasing() {
  static const std::set<std::string> kWords = {
      "how",     "many",   "much",    "count",   "number",   "total",   "top",     "most",
      "per",     "each",   "percent", "percentage", "proportion", "ratio", "fraction", "lines",
      "line",    "events", "event",   "logs",    "log",      "entries", "entry",   "occurred",
      "occur",   "there",  "were",    "was",     "are",      "the",     "last",    "past",
      "hour",    "hours",  "minute",  "minutes", "day",      "days",    "week",    "weeks",
      "group",   "grouped", "frequent", "common", "show",    "give",    "list",    "what",
      "which",   "and",    "for",     "with",    "from",     "that",    "this",    "have",
      "has",     "had",    "did",     "does",    "messages", "message", "records", "record",
      "by",      "in",     "of",      "all",     "many",     "been",    "is"};
  return kWords;
}

std::vector<std::string> content_words(std::string_view question) {
  std::vector<std::string> out;
  for (const std::string& t : alnum_tokens(question)) {
    if (t.size() < 3 || sql_phrasing().count(t)) continue;
    bool digits = std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (digits) continue;
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

}  // namespace

std::string_view ablation_name(Ablation a) {
  for (const auto& e : kAblations) {
    if (e.value == a) return e.name;
  }
  return "full";
}

Ablation parse_ablation(std::string_view s) {
  std::string v = to_lower(trim(s));
  std::replace(v.begin(), v.end(), '-', '_');
  for (const auto& e : kAblations) {
    if (e.name == v) return e.value;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown ablation condition '" + std::string(s) + "'");
}

const std::vector<Ablation>& all_ablations() {
  static const std::vector<Ablation> kAll = [] {
    std::vector<Ablation> v;
    for (const auto& e : kAblations) v.push_back(e.value);
    return v;
  }();
  return kAll;
}

PipelineConfig apply_ablation(Ablation condition, PipelineConfig p) {
  switch (condition) {
    case Ablation::kFull:
      break;
    case Ablation::kNoL1:
      p.forced_path = RoutePath::kSemantic;
      break;
    case Ablation::kNoL2:
      p.forced_tier = ModelTier::kSmall;
      break;
    case Ablation::kNoRouting:
      p.forced_path = RoutePath::kSemantic;
      p.forced_tier = ModelTier::kSmall;
      break;
    case Ablation::kSemanticOnly:
      p.forced_path = RoutePath::kSemantic;
      p.strategy = RetrievalStrategy::kDenseOnly;
      break;
    case Ablation::kKeywordOnly:
      p.forced_path = RoutePath::kKeyword;
      p.strategy = RetrievalStrategy::kKeywordOnly;
      break;
    case Ablation::kHybrid:
      p.strategy = RetrievalStrategy::kHybrid;
      break;
    case Ablation::kAlwaysLarge:
      p.forced_tier = ModelTier::kLarge;
      break;
    case Ablation::kNoDrain:
      p.templates_visible = false;
      p.router.templates_available = false;
      break;
  }
  return p;
}

json to_json(const QueryResponse& r) {
  json evidence = json::array();
  for (const EvidenceItem& e : r.evidence) {
    evidence.push_back({{"id", e.id}, {"text", e.text}, {"score", e.score}});
  }
  json lat = json::object();
  for (const auto& [k, v] : r.latencies) lat[k] = v;
  json starts = json::object();
  for (const auto& [k, v] : r.stage_starts) starts[k] = format_iso8601(v);
  json j{{"question", r.question},
         {"answer", r.answer},
         {"route", to_json(r.route)},
         {"l2", nullptr},
         {"tier", model_tier_name(r.tier)},
         {"evidence", evidence},
         {"sql_text", nullptr},
         {"latencies", lat},
         {"stage_starts", starts},
         {"trace_id", r.trace_id},
         {"degraded", r.degraded},
         {"degraded_reason", r.degraded_reason},
         {"ablation", ablation_name(r.ablation)},
         {"strategy", strategy_name(r.strategy)},
         {"sql_templates", r.sql_templates},
         {"rejected_term", nullptr}};
  if (r.l2) j["l2"] = to_json(*r.l2);
  if (r.sql_text) j["sql_text"] = *r.sql_text;
  if (r.rejected_term) j["rejected_term"] = *r.rejected_term;
  return j;
}

json to_json(const Explanation& e) {
  json j{{"route", to_json(e.route)},
         {"l2", to_json(e.l2)},
         {"tier", model_tier_name(e.tier)},
         {"rejected_term", nullptr}};
  if (e.rejected_term) j["rejected_term"] = *e.rejected_term;
  return j;
}

json to_json(const IngestSummary& s) {
  return json{{"report", {{"records", s.report.records}, {"dropped", s.report.dropped}}},
              {"chunks", s.chunks},            {"embedded", s.embedded},
              {"embed_failures", s.embed_failures}, {"templates", s.templates},
              {"embed_error", s.embed_error}};
}

struct Engine::Context {
  std::string question;
  QueryOptions opts;
  PipelineConfig pc;
  RequestTrace trace;
  QueryResponse resp;

  void degrade(const std::string& reason) {
    if (resp.degraded) {
      resp.degraded_reason += "; " + reason;
    } else {
      resp.degraded = true;
      resp.degraded_reason = reason;
    }
  }
};

Engine::Engine(EngineConfig cfg, std::shared_ptr<EmbeddingProvider> embedder,
               std::shared_ptr<Generator> generator, std::shared_ptr<TraceSink> traces,
               SignalVocabulary vocab)
    : cfg_(std::move(cfg)),
      vocab_(std::move(vocab)),
      embedder_(std::move(embedder)),
      generator_(std::move(generator)),
      traces_(std::move(traces)),
      miner_(cfg_.drain),
      lines_(std::make_unique<LineIndex>()),
      rows_(std::make_unique<RowStore>()),
      chunks_(std::make_unique<ChunkIndex>()) {
  cfg_.chunker.validate();
  cfg_.drain.validate();
  cfg_.router.validate();
  if (!embedder_) throw Error(ErrorCode::kInvalidConfig, "engine needs an embedding provider");
  if (!generator_) throw Error(ErrorCode::kInvalidConfig, "engine needs a generator");
  if (cfg_.top_k == 0) throw Error(ErrorCode::kInvalidConfig, "retrieval.top_k must be positive");
  if (cfg_.per_backend == 0) throw Error(ErrorCode::kInvalidConfig, "retrieval.per_backend must be positive");
  if (cfg_.k_rrf <= 0) throw Error(ErrorCode::kInvalidConfig, "retrieval.k_rrf must be positive");
  trace_ids_ = cfg_.trace_seed ? std::make_unique<TraceIdSource>(*cfg_.trace_seed)
                               : std::make_unique<TraceIdSource>();
  vectors_ = std::make_unique<VectorStore>(embedder_->dim(), embedder_->tag());
}

std::unique_ptr<Engine> Engine::create(EngineConfig cfg, std::shared_ptr<TraceSink> traces,
                                       const std::optional<std::filesystem::path>& vocab_path) {
  auto embedder = make_embedding_provider(cfg.embedding);
  auto generator = make_generator(cfg.generator);
  if (!traces && cfg.trace_log) traces = std::make_shared<FileTraceSink>(*cfg.trace_log);
  return std::make_unique<Engine>(std::move(cfg), std::move(embedder), std::move(generator),
                                  std::move(traces),
                                  vocab_path ? SignalVocabulary::load(vocab_path->string())
                                             : SignalVocabulary::from_env_or_builtin());
}

IngestSummary Engine::ingest_file(const std::filesystem::path& path, const SourceDescriptor& src) {
  const SourceDescriptor s = src.validated();
  const std::string key = source_stream(s.dataset, s.namespace_ + "/" + s.app + "/" + s.pod);
  std::unique_lock lock(mu_);
  std::vector<LogRecord> records;
  IngestionReport report = logrouter::ingest_file(
      path, s, [&](LogRecord&& r) { records.push_back(std::move(r)); }, next_line_[key]);
  IngestSummary summary = ingest_locked(std::move(records));
  summary.report = report;
  return summary;
}

IngestSummary Engine::ingest_lines(const std::vector<std::string>& lines, const SourceDescriptor& src) {
  const SourceDescriptor s = src.validated();
  const std::string key = source_stream(s.dataset, s.namespace_ + "/" + s.app + "/" + s.pod);
  std::unique_lock lock(mu_);
  std::vector<LogRecord> records;
  IngestionReport report = logrouter::ingest_lines(
      lines, s, [&](LogRecord&& r) { records.push_back(std::move(r)); }, next_line_[key]);
  IngestSummary summary = ingest_locked(std::move(records));
  summary.report = report;
  return summary;
}

IngestSummary Engine::ingest_records(std::vector<LogRecord> records) {
  std::unique_lock lock(mu_);
  std::size_t n = records.size();
  IngestSummary summary = ingest_locked(std::move(records));
  summary.report.records = n;
  return summary;
}

IngestSummary Engine::ingest_locked(std::vector<LogRecord> records) {
  IngestSummary summary;
  if (records.empty()) {
    summary.templates = miner_.catalogue().size();
    return summary;
  }
  for (const LogRecord& r : records) {
    std::size_t& next = next_line_[source_stream(r.dataset, r.source_key())];
    next = std::max(next, r.line_no + 1);
  }

  const bool training = !miner_.frozen();
  if (training) miner_.train(records);

  // Earlier rows follow their clusters as templates generalize.
  if (training) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      std::string id = miner_.annotate_one(records_[i]).template_id;
      if (id != rows_->rows()[i].template_id) rows_->set_template_id(i, std::move(id));
    }
  }
  for (const LogRecord& r : records) {
    AnnotatedRecord ann = miner_.annotate_one(r);
    row_by_key_[row_key(r.dataset, r.source_key(), r.line_no)] = rows_->size();
    rows_->add(StructuredRow::from(ann));
    lines_->add(r);
    records_.push_back(r);
  }

  std::vector<Chunk> chunks = chunk_records(records, cfg_.chunker);
  summary.chunks = chunks.size();
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const Chunk& c : chunks) texts.push_back(c.text);
  std::vector<EmbeddingVector> vecs;
  try {
    vecs = embedder_->embed_batch(texts);
  } catch (const Error& e) {
    summary.embed_failures = chunks.size();
    summary.embed_error = e.what();
  }
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i < vecs.size()) {
      vectors_->add(chunks[i], std::move(vecs[i]));
      ++summary.embedded;
    }
    chunks_->add(std::move(chunks[i]));
  }
  summary.templates = miner_.catalogue().size();
  return summary;
}

void Engine::freeze_drain() {
  std::unique_lock lock(mu_);
  miner_.freeze();
}

bool Engine::drain_frozen() const {
  std::shared_lock lock(mu_);
  return miner_.frozen();
}

void Engine::set_drain(DrainMiner miner) {
  std::unique_lock lock(mu_);
  miner_ = std::move(miner);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    rows_->set_template_id(i, miner_.annotate_one(records_[i]).template_id);
  }
}

void Engine::set_generator(std::shared_ptr<Generator> g) {
  std::unique_lock lock(mu_);
  generator_ = std::move(g);
}

PipelineConfig Engine::pipeline_for(const QueryOptions& opts) const {
  PipelineConfig base;
  base.router = cfg_.router;
  base.strategy = opts.strategy.value_or(cfg_.strategy);
  return apply_ablation(opts.ablation.value_or(cfg_.ablation), base);
}

Explanation Engine::explain(std::string_view question, const QueryOptions& opts) const {
  if (trim(question).empty()) throw Error(ErrorCode::kInvalidInput, "question must be non-empty");
  PipelineConfig pc = pipeline_for(opts);
  Explanation e;
  try {
    e.route = route_l1(question, vocab_, pc.router);
  } catch (const TermRejected& t) {
    e.route = t.partial();
    e.rejected_term = t.term();
  }
  if (pc.forced_path) e.route.path = *pc.forced_path;
  e.l2 = score_l2(question, vocab_, pc.router);
  if (pc.forced_tier) e.l2.tier = *pc.forced_tier;
  switch (e.route.path) {
    case RoutePath::kSemantic: e.tier = e.l2.tier; break;
    case RoutePath::kSql: e.tier = ModelTier::kCoder; break;
    default: e.tier = ModelTier::kSmall; break;
  }
  return e;
}

QueryResponse Engine::answer_query(std::string_view question, const QueryOptions& opts) {
  if (trim(question).empty()) throw Error(ErrorCode::kInvalidInput, "question must be non-empty");
  std::shared_lock lock(mu_);
  PipelineConfig pc = pipeline_for(opts);
  Context ctx{std::string(question), opts, pc, RequestTrace(trace_ids_->next(), traces_.get()), {}};
  QueryResponse& resp = ctx.resp;
  resp.question = ctx.question;
  resp.trace_id = ctx.trace.trace_id();
  resp.ablation = opts.ablation.value_or(cfg_.ablation);
  resp.strategy = pc.strategy;

  const Timestamp started = now_ms();
  const auto t0 = std::chrono::steady_clock::now();
  StageOutcome total_outcome = StageOutcome::kOk;
  try {
    {
      auto span = ctx.trace.span(stage::kL1Route);
      try {
        resp.route = route_l1(ctx.question, vocab_, pc.router);
      } catch (const TermRejected& e) {
        resp.route = e.partial();
        resp.rejected_term = e.term();
        span.set_outcome(StageOutcome::kDegraded);
      }
    }
    if (pc.forced_path) resp.route.path = *pc.forced_path;

    switch (resp.route.path) {
      case RoutePath::kGeneral: run_general(ctx); break;
      case RoutePath::kKeyword: run_keyword(ctx); break;
      case RoutePath::kSql: run_sql(ctx); break;
      case RoutePath::kSemantic: run_semantic(ctx); break;
    }
  } catch (const std::exception& e) {
    ctx.degrade(std::string("internal-error: ") + e.what());
    if (resp.answer.empty()) resp.answer = "Service unavailable: the request could not be completed.";
    total_outcome = StageOutcome::kError;
  }
  if (resp.degraded && total_outcome == StageOutcome::kOk) total_outcome = StageOutcome::kDegraded;
  std::chrono::duration<double, std::milli> total = std::chrono::steady_clock::now() - t0;
  ctx.trace.record(stage::kTotal, started, total.count(), total_outcome);
  resp.latencies = ctx.trace.latencies();
  resp.stage_starts = ctx.trace.starts();
  return std::move(ctx.resp);
}

void Engine::run_general(Context& ctx) {
  QueryResponse& resp = ctx.resp;
  resp.tier = ModelTier::kSmall;
  auto span = ctx.trace.span(stage::kLlmGenerate);
  try {
    resp.answer = generator_->generate({GenerationTask::kAnswer, ModelTier::kSmall, ctx.question, {}, {}});
  } catch (const Error& e) {
    span.set_outcome(StageOutcome::kDegraded);
    ctx.degrade(std::string("generator-unavailable: ") + e.what());
    resp.answer = std::string(kGeneratorDown);
  }
}

void Engine::run_keyword(Context& ctx) {
  QueryResponse& resp = ctx.resp;
  resp.tier = ModelTier::kSmall;
  std::optional<std::string> term = resp.route.extracted_search_term;
  if (!term) {
    for (const std::string& lit : quoted_spans(ctx.question)) {
      if (validate_search_term(lit)) {
        term = lit;
        break;
      }
    }
  }
  const std::size_t top_n = cfg_.keyword_top_n;
  {
    auto span = ctx.trace.span(stage::kKeywordSearch);
    std::vector<std::pair<RecordRef, double>> hits;
    if (term) {
      auto attr = vocab_.attribute_patterns.find(to_lower(*term));
      std::string pattern = attr != vocab_.attribute_patterns.end() ? attr->second : regex_escape(*term);
      for (const RecordRef& r : lines_->regex_search(pattern, top_n, true, ctx.opts.dataset)) {
        hits.emplace_back(r, 1.0);
      }
    } else {
      hits = lines_->fts_search(ctx.question, top_n, ctx.opts.dataset);
    }
    for (const auto& [ref, score] : hits) {
      resp.evidence.push_back({ref.to_string(), lines_->line(ref), score});
    }
  }
  if (resp.evidence.empty()) {
    resp.answer = "No matching log lines for \"" + term.value_or(ctx.question) + "\".";
    return;
  }
  std::vector<std::string> matched;
  for (const EvidenceItem& e : resp.evidence) matched.push_back(e.text);
  resp.answer = join(matched, "\n");
  if (!cfg_.keyword_summary) return;
  auto span = ctx.trace.span(stage::kLlmGenerate);
  try {
    resp.answer += "\n" + generator_->generate(
                              {GenerationTask::kSummary, ModelTier::kSmall, ctx.question, matched, {}});
  } catch (const Error& e) {
    span.set_outcome(StageOutcome::kDegraded);
    ctx.degrade(std::string("generator-unavailable: summary omitted: ") + e.what());
  }
}

std::vector<std::string> Engine::lookup_templates(Context& ctx) {
  std::vector<Template> catalogue;
  if (ctx.pc.templates_visible) catalogue = miner_.catalogue();
  std::vector<std::string> out;
  auto describe = [](const Template& t) { return t.template_id + ": " + t.template_string; };
  constexpr std::size_t kMaxTemplates = 10;
  {
    auto span = ctx.trace.span(stage::kSqlTemplateLookup);
    std::vector<std::string> words = content_words(ctx.question);
    if (ctx.pc.templates_visible && !words.empty()) {
      std::vector<std::string> escaped;
      for (const std::string& w : words) escaped.push_back(regex_escape(w));
      const std::string pattern = "\\b(?:" + join(escaped, "|") + ")\\b";
      rows_->touch();
      for (const Template& t : template_lookup(pattern, catalogue, *rows_, true)) {
        if (out.size() == kMaxTemplates) break;
        out.push_back(describe(t));
      }
    }
  }
  if (!out.empty()) return out;

  auto span = ctx.trace.span(stage::kSqlTemplateFallback);
  if (!ctx.pc.templates_visible || vectors_->size() == 0) return out;
  std::map<std::string, const Template*> by_id;
  for (const Template& t : catalogue) by_id[t.template_id] = &t;
  try {
    MetadataFilter filters;
    if (ctx.opts.dataset) filters["dataset"] = *ctx.opts.dataset;
    auto hits = vectors_->search(embedder_->embed(ctx.question), filters, cfg_.per_backend);
    std::set<std::string> seen;
    for (const auto& [chunk_id, score] : hits) {
      const Chunk* c = chunks_->find(chunk_id);
      if (!c) continue;
      for (std::size_t ln = c->start_line; ln < c->start_line + c->line_count; ++ln) {
        auto it = row_by_key_.find(row_key(c->dataset, c->source_key, ln));
        if (it == row_by_key_.end()) continue;
        const std::string& id = rows_->rows()[it->second].template_id;
        auto t = by_id.find(id);
        if (t == by_id.end() || !seen.insert(id).second) continue;
        out.push_back(describe(*t->second));
        if (out.size() == kMaxTemplates) return out;
      }
    }
  } catch (const Error&) {
    span.set_outcome(StageOutcome::kDegraded);
  }
  return out;
}

void Engine::run_sql(Context& ctx) {
  QueryResponse& resp = ctx.resp;
  resp.tier = ModelTier::kCoder;
  resp.sql_templates = lookup_templates(ctx);

  GenerationRequest req;
  req.task = GenerationTask::kSql;
  req.tier = ModelTier::kCoder;
  req.question = ctx.question;
  req.sql.sql_signal = resp.route.sql_signal;
  for (const std::string& id : resp.route.matched_patterns) {
    for (const Signal& s : vocab_.sql_signals) {
      if (s.id == id) req.sql.sql_signals.push_back(id);
    }
  }
  req.sql.reference_time = rows_->latest_ts();
  req.sql.templates = resp.sql_templates;

  std::optional<RestrictedQuery> query;
  {
    auto span = ctx.trace.span(stage::kSqlGenerate);
    std::string last_error;
    for (int attempt = 0; attempt < 2 && !query; ++attempt) {
      try {
        query = parse_restricted_sql(generator_->generate(req));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kSqlUnparseable || e.code() == ErrorCode::kInvalidQuery) {
          last_error = e.what();
          req.sql.previous_error = last_error;
          continue;
        }
        span.set_outcome(StageOutcome::kDegraded);
        ctx.degrade(std::string("generator-unavailable: ") + e.what());
        resp.answer = std::string(kGeneratorDown);
        return;
      }
    }
    if (!query) {
      span.set_outcome(StageOutcome::kDegraded);
      ctx.degrade("sql-unavailable: " + last_error);
      resp.answer = std::string(kSqlDown);
      return;
    }
  }
  if (ctx.opts.dataset) query->where.push_back(EqualsPredicate{Column::kDataset, *ctx.opts.dataset});
  resp.sql_text = render_sql(*query);

  auto span = ctx.trace.span(stage::kSqlExecute);
  if (rows_->size() == 0) {
    span.set_outcome(StageOutcome::kDegraded);
    ctx.degrade("sql-unavailable: empty store");
    resp.answer = std::string(kSqlDown);
    return;
  }
  try {
    rows_->touch();
    resp.answer = format_result(execute_restricted(*query, *rows_));
  } catch (const Error& e) {
    span.set_outcome(StageOutcome::kDegraded);
    ctx.degrade(std::string("sql-unavailable: ") + e.what());
    resp.answer = std::string(kSqlDown);
  }
}

void Engine::run_semantic(Context& ctx) {
  QueryResponse& resp = ctx.resp;
  std::vector<std::string> context;
  {
    auto span = ctx.trace.span(stage::kSemanticSearch);
    RetrievalOptions ro;
    ro.strategy = ctx.pc.strategy;
    ro.top_k = cfg_.top_k;
    ro.per_backend = cfg_.per_backend;
    ro.k_rrf = cfg_.k_rrf;
    if (ctx.opts.dataset) ro.filters["dataset"] = *ctx.opts.dataset;
    Retriever retriever(*chunks_, *vectors_, embedder_);
    RetrievalResult rr = retriever.retrieve(ctx.question, ro);
    resp.strategy = rr.strategy_used;
    if (rr.degraded) {
      span.set_outcome(StageOutcome::kDegraded);
      ctx.degrade("retrieval-degraded: " + rr.degraded_reason);
    }
    for (const ScoredChunk& sc : rr.chunks) {
      resp.evidence.push_back({sc.chunk->chunk_id, sc.chunk->text, sc.score});
      context.push_back(sc.chunk->text);
    }
  }
  {
    auto span = ctx.trace.span(stage::kL2Route);
    L2Decision l2 = score_l2(ctx.question, vocab_, ctx.pc.router);
    if (ctx.pc.forced_tier) l2.tier = *ctx.pc.forced_tier;
    resp.l2 = l2;
    resp.tier = l2.tier;
  }
  auto span = ctx.trace.span(stage::kLlmGenerate);
  try {
    resp.answer = generator_->generate({GenerationTask::kAnswer, resp.tier, ctx.question, context, {}});
  } catch (const Error& e) {
    span.set_outcome(StageOutcome::kDegraded);
    ctx.degrade(std::string("generator-unavailable: ") + e.what());
    resp.answer = std::string(kGeneratorDown);
  }
}

std::vector<Template> Engine::templates() const {
  std::shared_lock lock(mu_);
  return miner_.catalogue();
}

IndexCounts Engine::counts() const {
  std::shared_lock lock(mu_);
  return IndexCounts{rows_->size(), chunks_->size(), vectors_->size(), miner_.catalogue().size()};
}

AccessCounts Engine::access_counts() const {
  std::shared_lock lock(mu_);
  return AccessCounts{lines_->access_count(), chunks_->access_count(), vectors_->access_count(),
                      rows_->access_count()};
}

json Engine::health() const {
  IndexCounts c = counts();
  std::shared_ptr<Generator> gen;
  {
    std::shared_lock lock(mu_);
    gen = generator_;
  }
  return json{{"status", "ok"},
              {"counts",
               {{"records", c.records}, {"chunks", c.chunks}, {"vectors", c.vectors}, {"templates", c.templates}}},
              {"providers",
               {{"embedding", {{"tag", embedder_->tag()}, {"reachable", embedder_->reachable()}}},
                {"generator", {{"reachable", gen->reachable()}}}}},
              {"drain_frozen", drain_frozen()}};
}

std::size_t Engine::count_chunks_containing(std::string_view needle,
                                            const std::optional<std::string>& dataset) const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const Chunk& c : chunks_->chunks()) {
    if (dataset && c.dataset != *dataset) continue;
    if (c.text.find(needle) != std::string::npos) ++n;
  }
  return n;
}

void Engine::save(const std::filesystem::path& dir) const {
  std::shared_lock lock(mu_);
  std::filesystem::create_directories(dir);
  miner_.save((dir / "drain.json").string());
  rows_->save(dir / "rows.ndjson");
  {
    std::ofstream out(dir / "chunks.jsonl", std::ios::binary | std::ios::trunc);
    for (const Chunk& c : chunks_->chunks()) out << chunk_to_json(c).dump() << '\n';
  }
  vectors_->save(dir / "vectors.bin", dir / "vectors.jsonl");
  json next = json::object();
  for (const auto& [k, v] : next_line_) next[k] = v;
  std::ofstream meta(dir / "meta.json", std::ios::binary | std::ios::trunc);
  meta << json{{"format", 1}, {"next_line", next}, {"embedding_tag", embedder_->tag()}}.dump(2) << '\n';
}

void Engine::load(const std::filesystem::path& dir) {
  std::unique_lock lock(mu_);
  if (!std::filesystem::exists(dir / "meta.json")) {
    throw Error(ErrorCode::kStoreContract, "no snapshot in " + dir.string());
  }
  DrainMiner miner = DrainMiner::load((dir / "drain.json").string());
  auto rows = std::make_unique<RowStore>();
  rows->load(dir / "rows.ndjson");
  auto chunks = std::make_unique<ChunkIndex>();
  {
    std::ifstream in(dir / "chunks.jsonl", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) chunks->add(chunk_from_json(json::parse(line)));
    }
  }
  auto vectors = std::make_unique<VectorStore>(embedder_->dim(), embedder_->tag());
  vectors->load(dir / "vectors.bin", dir / "vectors.jsonl");
  json meta;
  {
    std::ifstream in(dir / "meta.json");
    meta = json::parse(in);
  }

  auto lines = std::make_unique<LineIndex>();
  std::vector<LogRecord> records;
  records.reserve(rows->size());
  for (const StructuredRow& r : rows->rows()) {
    LogRecord rec;
    rec.ts = r.ts;
    rec.namespace_ = r.namespace_;
    rec.app = r.app;
    rec.pod = r.pod;
    rec.container = r.container;
    rec.level = r.level;
    rec.line = r.line;
    rec.line_no = r.line_no;
    rec.dataset = r.dataset;
    lines->add(rec);
    records.push_back(std::move(rec));
  }
  miner_ = std::move(miner);
  rows_ = std::move(rows);
  chunks_ = std::move(chunks);
  vectors_ = std::move(vectors);
  lines_ = std::move(lines);
  records_ = std::move(records);
  next_line_.clear();
  const json next = meta.value("next_line", json::object());
  for (const auto& [k, v] : next.items()) {
    next_line_[k] = v.get<std::size_t>();
  }
  rebuild_row_keys();
}

void Engine::rebuild_row_keys() {
  row_by_key_.clear();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const LogRecord& r = records_[i];
    row_by_key_[row_key(r.dataset, r.source_key(), r.line_no)] = i;
  }
}

}  // namespace logrouter
