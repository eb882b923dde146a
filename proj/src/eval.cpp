#include "logrouter/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "logrouter/error.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

using nlohmann::json;

QuestionRecord question_from_json(const json& j) {
  QuestionRecord q;
  q.id = j.at("id").get<std::string>();
  q.dataset = j.value("dataset", std::string());
  q.question = j.at("question").get<std::string>();
  std::string route = j.at("gold_route").get<std::string>();
  auto parsed = parse_route_path(route);
  if (!parsed || *parsed == RoutePath::kGeneral) {
    throw Error(ErrorCode::kInvalidInput, "question " + q.id + ": gold_route must be keyword, semantic or sql");
  }
  q.gold_route = *parsed;
  q.reference_answer = j.value("reference_answer", std::string());
  if (j.contains("reference_text") && j["reference_text"].is_string()) {
    q.reference_text = j["reference_text"].get<std::string>();
  }
  q.synthetic = j.value("synthetic", false);
  return q;
}

std::vector<QuestionRecord> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot read question set " + path.string());
  std::vector<QuestionRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    QuestionRecord q;
    try {
      q = question_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidInput,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(q.id).second) {
      throw Error(ErrorCode::kInvalidInput, path.string() + ":" + std::to_string(line_no) +
                                                ": duplicate question id " + q.id);
    }
    out.push_back(std::move(q));
  }
  return out;
}

namespace {

std::size_t class_index(RoutePath p) {
  for (std::size_t i = 0; i < kEvalClasses.size(); ++i) {
    if (kEvalClasses[i] == p) return i;
  }
  throw Error(ErrorCode::kInvalidInput,
              "routing label '" + std::string(route_path_name(p)) + "' is not keyword, semantic or sql");
}

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

}  // namespace

RoutingMetrics routing_metrics(const std::vector<RoutePath>& gold, const std::vector<RoutePath>& predicted) {
  if (gold.size() != predicted.size()) {
    throw Error(ErrorCode::kInvalidInput, "gold and predicted lengths differ: " + std::to_string(gold.size()) +
                                              " vs " + std::to_string(predicted.size()));
  }
  RoutingMetrics m;
  m.n = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++m.confusion[class_index(gold[i])][class_index(predicted[i])];
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t tp = m.confusion[c][c];
    std::size_t row = 0, col = 0;
    for (std::size_t o = 0; o < 3; ++o) {
      row += m.confusion[c][o];
      col += m.confusion[o][c];
    }
    correct += tp;
    ClassMetrics cm;
    cm.support = row;
    cm.precision = safe_div(static_cast<double>(tp), static_cast<double>(col));
    cm.recall = safe_div(static_cast<double>(tp), static_cast<double>(row));
    cm.f1 = safe_div(2.0 * cm.precision * cm.recall, cm.precision + cm.recall);
    m.per_class[kEvalClasses[c]] = cm;
  }
  m.accuracy = safe_div(static_cast<double>(correct), static_cast<double>(m.n));
  return m;
}

double rouge1_f1(std::string_view candidate, std::string_view reference) {
  std::vector<std::string> c = alnum_tokens(candidate);
  std::vector<std::string> r = alnum_tokens(reference);
  if (c.empty() || r.empty()) return 0.0;
  std::map<std::string, std::size_t> rc;
  for (const auto& t : r) ++rc[t];
  std::size_t overlap = 0;
  for (const auto& t : c) {
    auto it = rc.find(t);
    if (it != rc.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  double p = static_cast<double>(overlap) / static_cast<double>(c.size());
  double rr = static_cast<double>(overlap) / static_cast<double>(r.size());
  return 2.0 * p * rr / (p + rr);
}

RetrievalScore score_retrieval(const RetrievalSample& s, std::size_t k) {
  RetrievalScore out;
  std::size_t found = 0;
  std::size_t limit = std::min(k, s.ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (s.ranked[i].find(s.reference) == std::string::npos) continue;
    if (found == 0) out.reciprocal_rank = 1.0 / static_cast<double>(i + 1);
    ++found;
  }
  out.hit = found > 0 ? 1.0 : 0.0;
  std::size_t total = std::max(s.bearing_total, found);
  out.recall = safe_div(static_cast<double>(found), static_cast<double>(total));
  return out;
}

RetrievalMetrics retrieval_metrics(const std::vector<RetrievalSample>& samples, std::size_t k) {
  RetrievalMetrics m;
  m.k = k;
  m.n = samples.size();
  if (samples.empty()) return m;
  for (const RetrievalSample& s : samples) {
    RetrievalScore r = score_retrieval(s, k);
    m.hit_at_k += r.hit;
    m.recall_at_k += r.recall;
    m.mrr += r.reciprocal_rank;
  }
  double n = static_cast<double>(samples.size());
  m.hit_at_k /= n;
  m.recall_at_k /= n;
  m.mrr /= n;
  return m;
}

std::optional<double> cosine_answer_similarity(std::string_view candidate, std::string_view reference,
                                               const EmbeddingProvider& provider) {
  if (is_blank(candidate) || is_blank(reference)) return std::nullopt;
  try {
    return cosine(provider.embed(candidate), provider.embed(reference));
  } catch (const Error&) {
    return std::nullopt;
  }
}

LatencyStats latency_stats(std::vector<double> values) {
  LatencyStats s;
  s.n = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  auto rank = [&](double p) {
    auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(idx, 1) - 1];
  };
  s.p50 = rank(0.50);
  s.p95 = rank(0.95);
  return s;
}

namespace {

json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Files injected in offline mode, chunked and embedded once per run.
struct OfflineCorpus {
  std::unique_ptr<ChunkIndex> chunks = std::make_unique<ChunkIndex>();
  std::unique_ptr<VectorStore> vectors;
};

OfflineCorpus build_corpus(const std::filesystem::path& file, const std::string& dataset, Engine& engine) {
  SourceDescriptor src;
  src.dataset = dataset.empty() ? "offline" : dataset;
  std::vector<LogRecord> records;
  logrouter::ingest_file(file, src.validated(), [&](LogRecord&& r) { records.push_back(std::move(r)); });
  OfflineCorpus corpus;
  auto embedder = engine.embedder();
  corpus.vectors = std::make_unique<VectorStore>(embedder->dim(), embedder->tag());
  std::vector<Chunk> chunks = chunk_records(records, engine.config().chunker);
  std::vector<std::string> texts;
  for (const Chunk& c : chunks) texts.push_back(c.text);
  std::vector<EmbeddingVector> vecs;
  try {
    vecs = embedder->embed_batch(texts);
  } catch (const Error&) {
  }
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i < vecs.size()) corpus.vectors->add(chunks[i], std::move(vecs[i]));
    corpus.chunks->add(std::move(chunks[i]));
  }
  return corpus;
}

std::size_t count_containing(const ChunkIndex& chunks, const std::string& needle) {
  std::size_t n = 0;
  for (const Chunk& c : chunks.chunks()) {
    if (c.text.find(needle) != std::string::npos) ++n;
  }
  return n;
}

std::string fmt(double v, const char* f = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

}  // namespace

json to_json(const MetricsReport& r) {
  json per_class = json::object();
  for (RoutePath c : kEvalClasses) {
    const ClassMetrics& m = r.routing.per_class.at(c);
    per_class[std::string(route_path_name(c))] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  json matrix = json::array();
  for (const auto& row : r.routing.confusion) matrix.push_back(row);
  json labels = json::array();
  for (RoutePath c : kEvalClasses) labels.push_back(route_path_name(c));
  json latency = json::object();
  for (const auto& [stage, s] : r.latency) {
    latency[stage] = {{"mean", s.mean}, {"p50", s.p50}, {"p95", s.p95}, {"n", s.n}};
  }
  json errors = json::array();
  for (const EvalError& e : r.errors) errors.push_back({{"id", e.id}, {"message", e.message}});
  return json{
      {"condition", ablation_name(r.condition)},
      {"mode", r.mode == EvalMode::kOnline ? "online" : "offline"},
      {"n", r.n},
      {"routing",
       {{"accuracy", r.routing.accuracy},
        {"per_class", per_class},
        {"confusion", {{"labels", labels}, {"matrix", matrix}}}}},
      {"answer",
       {{"mean_cosine", opt_number(r.mean_cosine)},
        {"mean_rouge1_f1", opt_number(r.mean_rouge1_f1)},
        {"cosine_coverage", r.cosine_coverage},
        {"rouge_coverage", r.rouge_coverage}}},
      {"retrieval",
       {{"hit_at_k", r.retrieval.hit_at_k},
        {"recall_at_k", r.retrieval.recall_at_k},
        {"mrr", r.retrieval.mrr},
        {"k", r.retrieval.k},
        {"n", r.retrieval.n}}},
      {"latency", latency},
      {"extensions",
       {{"bertscore_f1", nullptr},
        {"ragas_faithfulness", nullptr},
        {"ragas_context_precision", nullptr},
        {"answer_correctness", nullptr}}},
      {"errors", errors}};
}

std::string render_markdown(const MetricsReport& r) {
  std::ostringstream md;
  md << "# Evaluation report\n\n";
  md << "Condition `" << ablation_name(r.condition) << "`, mode `"
     << (r.mode == EvalMode::kOnline ? "online" : "offline") << "`, " << r.n << " questions.\n\n";

  md << "## Routing\n\n| Class | Precision | Recall | F1 | Support |\n|---|---|---|---|---|\n";
  for (RoutePath c : kEvalClasses) {
    const ClassMetrics& m = r.routing.per_class.at(c);
    md << "| " << route_path_name(c) << " | " << fmt(m.precision) << " | " << fmt(m.recall) << " | "
       << fmt(m.f1) << " | " << m.support << " |\n";
  }
  md << "\nAccuracy: " << fmt(r.routing.accuracy) << "\n\n";
  md << "| gold \\ predicted | keyword | semantic | sql |\n|---|---|---|---|\n";
  for (std::size_t g = 0; g < 3; ++g) {
    md << "| " << route_path_name(kEvalClasses[g]);
    for (std::size_t p = 0; p < 3; ++p) md << " | " << r.routing.confusion[g][p];
    md << " |\n";
  }

  double total_mean = r.latency.count("total") ? r.latency.at("total").mean : 0.0;
  md << "\n## Summary\n\n"
     << "| Condition | Routing acc. | Cosine | ROUGE-1 F1 | Hit@" << r.retrieval.k << " | Recall@" << r.retrieval.k
     << " | MRR | Mean total (ms) |\n|---|---|---|---|---|---|---|---|\n"
     << "| " << ablation_name(r.condition) << " | " << fmt(r.routing.accuracy) << " | " << fmt_opt(r.mean_cosine)
     << " | " << fmt_opt(r.mean_rouge1_f1) << " | " << fmt(r.retrieval.hit_at_k) << " | "
     << fmt(r.retrieval.recall_at_k) << " | " << fmt(r.retrieval.mrr) << " | " << fmt(total_mean, "%.2f")
     << " |\n\n";
  md << "Retrieval metrics cover " << r.retrieval.n << " questions with a reference text. "
     << "BERTScore, RAGAS and judged correctness are not computed.\n";

  md << "\n## Latency (ms)\n\n| Stage | Mean | p50 | p95 | n |\n|---|---|---|---|---|\n";
  for (const auto& [stage, s] : r.latency) {
    md << "| " << stage << " | " << fmt(s.mean, "%.2f") << " | " << fmt(s.p50, "%.2f") << " | "
       << fmt(s.p95, "%.2f") << " | " << s.n << " |\n";
  }
  if (!r.errors.empty()) {
    md << "\n## Errors\n\n";
    for (const EvalError& e : r.errors) md << "- `" << e.id << "`: " << e.message << "\n";
  }
  return md.str();
}

MetricsReport run_eval(Engine& engine, const std::vector<QuestionRecord>& questions, const EvalOptions& opts) {
  MetricsReport report;
  report.condition = opts.condition;
  report.mode = opts.mode;
  report.n = questions.size();
  report.retrieval.k = opts.k;

  std::vector<RoutePath> gold, predicted;
  std::vector<RetrievalSample> samples;
  std::map<std::string, std::vector<double>> stage_values;
  double cosine_sum = 0.0, rouge_sum = 0.0;
  std::map<std::string, OfflineCorpus> corpora;
  TraceIdSource offline_ids(opts.seed);
  auto embedder = engine.embedder();

  for (const QuestionRecord& q : questions) {
    json detail{{"id", q.id},
                {"dataset", q.dataset},
                {"synthetic", q.synthetic},
                {"question", q.question},
                {"gold_route", route_path_name(q.gold_route)}};
    QueryOptions qo;
    qo.ablation = opts.condition;
    if (!q.dataset.empty()) qo.dataset = q.dataset;

    std::string answer;
    std::string trace_id;
    RoutePath path = RoutePath::kSemantic;
    std::map<std::string, double> latencies;
    std::optional<RetrievalSample> sample;

    try {
      if (opts.mode == EvalMode::kOnline) {
        QueryResponse resp = engine.answer_query(q.question, qo);
        path = resp.route.path;
        answer = resp.answer;
        trace_id = resp.trace_id;
        latencies = resp.latencies;
        detail["route"] = to_json(resp.route);
        detail["l2"] = resp.l2 ? to_json(*resp.l2) : json(nullptr);
        detail["tier"] = model_tier_name(resp.tier);
        json ids = json::array();
        for (const EvidenceItem& e : resp.evidence) ids.push_back(e.id);
        detail["evidence"] = ids;
        detail["sql_text"] = resp.sql_text ? json(*resp.sql_text) : json(nullptr);
        detail["degraded"] = resp.degraded;
        detail["degraded_reason"] = resp.degraded_reason;
        if (q.reference_text && path == RoutePath::kSemantic) {
          RetrievalSample s;
          for (const EvidenceItem& e : resp.evidence) s.ranked.push_back(e.text);
          s.reference = *q.reference_text;
          s.bearing_total = engine.count_chunks_containing(*q.reference_text, qo.dataset);
          sample = std::move(s);
        }
      } else {
        Explanation ex = engine.explain(q.question, qo);
        path = ex.route.path;
        detail["route"] = to_json(ex.route);
        detail["l2"] = to_json(ex.l2);
        detail["tier"] = model_tier_name(ex.l2.tier);
        std::filesystem::path file = opts.data_root / ((q.dataset.empty() ? "offline" : q.dataset) + ".log");
        if (!std::filesystem::exists(file)) {
          throw Error(ErrorCode::kIngestionFailed, "dataset file " + file.string() + " not found");
        }
        auto it = corpora.find(file.string());
        if (it == corpora.end()) it = corpora.emplace(file.string(), build_corpus(file, q.dataset, engine)).first;
        const OfflineCorpus& corpus = it->second;

        RequestTrace trace(offline_ids.next(), nullptr);
        trace_id = trace.trace_id();
        const auto t0 = std::chrono::steady_clock::now();
        const Timestamp started =
            std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
        RetrievalResult rr;
        {
          auto span = trace.span(stage::kSemanticSearch);
          RetrievalOptions ro;
          ro.strategy = opts.offline_strategy;
          ro.top_k = opts.k;
          ro.per_backend = engine.config().per_backend;
          ro.k_rrf = engine.config().k_rrf;
          rr = Retriever(*corpus.chunks, *corpus.vectors, embedder).retrieve(q.question, ro);
          if (rr.degraded) span.set_outcome(StageOutcome::kDegraded);
        }
        std::vector<std::string> context;
        json ids = json::array();
        for (const ScoredChunk& sc : rr.chunks) {
          context.push_back(sc.chunk->text);
          ids.push_back(sc.chunk->chunk_id);
        }
        bool degraded = rr.degraded;
        std::string reason = rr.degraded_reason;
        {
          auto span = trace.span(stage::kLlmGenerate);
          try {
            answer = engine.generator()->generate(
                {GenerationTask::kAnswer, ex.l2.tier, q.question, context, {}});
          } catch (const Error& e) {
            span.set_outcome(StageOutcome::kDegraded);
            degraded = true;
            reason += std::string(reason.empty() ? "" : "; ") + "generator-unavailable: " + e.what();
          }
        }
        std::chrono::duration<double, std::milli> total = std::chrono::steady_clock::now() - t0;
        trace.record(stage::kTotal, started, total.count(), StageOutcome::kOk);
        latencies = trace.latencies();
        detail["evidence"] = ids;
        detail["sql_text"] = nullptr;
        detail["degraded"] = degraded;
        detail["degraded_reason"] = reason;
        if (q.reference_text) {
          RetrievalSample s;
          s.ranked = context;
          s.reference = *q.reference_text;
          s.bearing_total = count_containing(*corpus.chunks, *q.reference_text);
          sample = std::move(s);
        }
      }
      detail["error"] = nullptr;
    } catch (const std::exception& e) {
      report.errors.push_back({q.id, e.what()});
      detail["error"] = e.what();
    }

    RoutePath scored = path == RoutePath::kGeneral ? RoutePath::kSemantic : path;
    gold.push_back(q.gold_route);
    predicted.push_back(scored);
    detail["predicted_route"] = route_path_name(path);
    detail["answer"] = answer;
    detail["trace_id"] = trace_id;

    std::optional<double> cos;
    std::optional<double> rouge;
    if (!q.reference_answer.empty() && !is_blank(answer)) {
      cos = cosine_answer_similarity(answer, q.reference_answer, *embedder);
      rouge = rouge1_f1(answer, q.reference_answer);
    }
    if (cos) {
      cosine_sum += *cos;
      ++report.cosine_coverage;
    }
    if (rouge) {
      rouge_sum += *rouge;
      ++report.rouge_coverage;
    }
    detail["cosine"] = opt_number(cos);
    detail["rouge1_f1"] = opt_number(rouge);
    if (sample) {
      RetrievalScore rs = score_retrieval(*sample, opts.k);
      detail["retrieval"] = {{"hit", rs.hit}, {"recall", rs.recall}, {"reciprocal_rank", rs.reciprocal_rank}};
      samples.push_back(std::move(*sample));
    } else {
      detail["retrieval"] = nullptr;
    }

    json lat = json::object();
    for (const auto& [stage, ms] : latencies) {
      stage_values[stage].push_back(ms);
      lat[stage] = ms;
    }
    report.latency_details.push_back({{"id", q.id}, {"trace_id", trace_id}, {"latencies", lat}});
    report.details.push_back(std::move(detail));
  }

  report.routing = routing_metrics(gold, predicted);
  report.retrieval = retrieval_metrics(samples, opts.k);
  if (report.cosine_coverage) report.mean_cosine = cosine_sum / static_cast<double>(report.cosine_coverage);
  if (report.rouge_coverage) report.mean_rouge1_f1 = rouge_sum / static_cast<double>(report.rouge_coverage);
  for (auto& [stage, values] : stage_values) report.latency[stage] = latency_stats(std::move(values));

  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    std::ofstream(*opts.out_dir / "report.json", std::ios::binary | std::ios::trunc)
        << to_json(report).dump(2) << '\n';
    std::ofstream(*opts.out_dir / "report.md", std::ios::binary | std::ios::trunc) << render_markdown(report);
    std::ofstream details(*opts.out_dir / "details.jsonl", std::ios::binary | std::ios::trunc);
    for (const json& d : report.details) details << d.dump() << '\n';
    std::ofstream lat(*opts.out_dir / "latencies.jsonl", std::ios::binary | std::ios::trunc);
    for (const json& d : report.latency_details) lat << d.dump() << '\n';
  }
  return report;
}

}  // namespace logrouter
