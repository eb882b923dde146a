#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "logrouter/error.hpp"
#include "logrouter/eval.hpp"
#include "support.hpp"

using namespace logrouter;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<QuestionRecord> mini() { return load_questions(fixtures::mini_dir() / "questions.jsonl"); }

std::unique_ptr<Engine> mini_engine(std::uint64_t seed = 20240601) {
  auto e = fixtures::offline_engine(fixtures::offline_config(seed));
  e->ingest_file(fixtures::mini_dir() / "linux.log", fixtures::linux_source());
  return e;
}

}  // namespace

TEST(RoutingMetrics, LinuxConfusionArithmetic) {
  using R = RoutePath;
  std::vector<R> gold, pred;
  for (int i = 0; i < 5; ++i) gold.push_back(R::kKeyword), pred.push_back(R::kKeyword);
  for (int i = 0; i < 12; ++i) gold.push_back(R::kSemantic), pred.push_back(i == 0 ? R::kKeyword : R::kSemantic);
  for (int i = 0; i < 2; ++i) gold.push_back(R::kSql), pred.push_back(R::kSql);
  RoutingMetrics m = routing_metrics(gold, pred);
  EXPECT_NEAR(m.per_class[R::kKeyword].precision, 0.833, 5e-4);
  EXPECT_NEAR(m.per_class[R::kKeyword].recall, 1.000, 5e-4);
  EXPECT_NEAR(m.per_class[R::kKeyword].f1, 0.909, 5e-4);
  EXPECT_NEAR(m.per_class[R::kSemantic].precision, 1.000, 5e-4);
  EXPECT_NEAR(m.per_class[R::kSemantic].recall, 0.917, 5e-4);
  EXPECT_NEAR(m.per_class[R::kSemantic].f1, 0.957, 5e-4);
  EXPECT_NEAR(m.per_class[R::kSql].f1, 1.0, 5e-4);
  EXPECT_NEAR(m.accuracy, 0.947, 5e-4);
  EXPECT_EQ(m.per_class[R::kSemantic].support, 12u);
  EXPECT_EQ(m.confusion[1][0], 1u);
}

TEST(RoutingMetrics, DegenerateCases) {
  using R = RoutePath;
  std::vector<R> gold = {R::kKeyword, R::kSemantic, R::kSql};
  RoutingMetrics all = routing_metrics(gold, gold);
  EXPECT_DOUBLE_EQ(all.accuracy, 1.0);
  for (R c : kEvalClasses) EXPECT_DOUBLE_EQ(all.per_class[c].f1, 1.0);
  RoutingMetrics one = routing_metrics(gold, {R::kSql, R::kSql, R::kSql});
  EXPECT_DOUBLE_EQ(one.per_class[R::kSql].recall, 1.0);
  EXPECT_DOUBLE_EQ(one.per_class[R::kKeyword].recall, 0.0);
  EXPECT_DOUBLE_EQ(one.per_class[R::kKeyword].precision, 0.0);
  EXPECT_THROW(routing_metrics(gold, {R::kSql}), Error);
  EXPECT_THROW(routing_metrics({R::kGeneral}, {R::kSql}), Error);
}

TEST(Rouge, Examples) {
  EXPECT_DOUBLE_EQ(rouge1_f1("disk full", "disk full"), 1.0);
  EXPECT_DOUBLE_EQ(rouge1_f1("alpha", "beta"), 0.0);
  EXPECT_NEAR(rouge1_f1("error count high", "error rate high"), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(rouge1_f1("", "x"), 0.0);
  EXPECT_NEAR(rouge1_f1("a a b", "a b b"), 2.0 / 3.0, 1e-12);
}

TEST(Retrieval, Examples) {
  RetrievalSample s;
  s.ranked = {"x", "y", "has REF here", "REF again"};
  s.reference = "REF";
  s.bearing_total = 2;
  RetrievalScore r = score_retrieval(s, 10);
  EXPECT_EQ(r.hit, 1.0);
  EXPECT_NEAR(r.reciprocal_rank, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(score_retrieval(s, 2).hit, 0.0);
  RetrievalSample half;
  half.ranked = {"REF"};
  half.reference = "REF";
  half.bearing_total = 2;
  EXPECT_EQ(score_retrieval(half, 10).recall, 0.5);
  RetrievalMetrics m = retrieval_metrics({s, half}, 10);
  EXPECT_NEAR(m.mrr, (1.0 / 3.0 + 1.0) / 2.0, 1e-12);
  EXPECT_EQ(m.n, 2u);
}

TEST(Retrieval, MonotoneInK) {
  RetrievalSample s;
  for (int i = 0; i < 30; ++i) s.ranked.push_back(i % 7 == 6 ? "REF" : "no");
  s.reference = "REF";
  s.bearing_total = 4;
  double prev_hit = 0, prev_recall = 0;
  for (std::size_t k = 1; k <= 30; ++k) {
    RetrievalScore r = score_retrieval(s, k);
    EXPECT_GE(r.hit, prev_hit);
    EXPECT_GE(r.recall, prev_recall);
    EXPECT_LE(r.reciprocal_rank, 1.0);
    prev_hit = r.hit;
    prev_recall = r.recall;
  }
}

TEST(Cosine, AnswerSimilarity) {
  HashedEmbedder h;
  EXPECT_NEAR(*cosine_answer_similarity("disk full on node", "disk full on node", h), 1.0, 1e-6);
  EXPECT_NEAR(*cosine_answer_similarity("disk full on node", "node on full disk", h), 1.0, 1e-6);
  EXPECT_FALSE(cosine_answer_similarity("", "x", h));
  EXPECT_FALSE(cosine_answer_similarity("a", "b", fixtures::DownEmbedder()));
}

TEST(Latency, NearestRank) {
  LatencyStats s = latency_stats({5, 1, 4, 2, 3});
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.p50, 3.0);
  EXPECT_DOUBLE_EQ(s.p95, 5.0);
  EXPECT_EQ(latency_stats({}).n, 0u);
}

TEST(Questions, LoaderValidates) {
  auto dir = std::filesystem::temp_directory_path();
  auto p = dir / "lr_q_dup.jsonl";
  std::ofstream(p) << R"({"id":"a","question":"q","gold_route":"sql"})" << "\n"
                   << R"({"id":"a","question":"q","gold_route":"sql"})" << "\n";
  EXPECT_THROW(load_questions(p), Error);
  std::ofstream(p) << R"({"id":"a","question":"q","gold_route":"general"})" << "\n";
  EXPECT_THROW(load_questions(p), Error);
  std::filesystem::remove(p);
  EXPECT_EQ(mini().size(), 21u);
}

TEST(RunEval, FullConditionOnMiniSet) {
  auto qs = mini();
  auto e = mini_engine();
  EvalOptions o;
  MetricsReport r = run_eval(*e, qs, o);
  EXPECT_TRUE(r.errors.empty());
  // Every vocabulary exemplar routes to its gold path.
  for (const auto& d : r.details) {
    if (d["id"].get<std::string>().rfind("tab1_", 0) == 0) EXPECT_EQ(d["predicted_route"], d["gold_route"]);
  }
  std::size_t trace = 0;
  for (std::size_t i = 0; i < 3; ++i) trace += r.routing.confusion[i][i];
  EXPECT_DOUBLE_EQ(r.routing.accuracy, double(trace) / double(r.n));
  EXPECT_GT(r.routing.accuracy, 0.9);
  EXPECT_GT(r.retrieval.n, 0u);
  EXPECT_TRUE(r.mean_rouge1_f1.has_value());
}

TEST(RunEval, NoL1AccuracyIsSemanticShare) {
  auto qs = mini();
  auto e = mini_engine();
  EvalOptions o;
  o.condition = Ablation::kNoL1;
  MetricsReport r = run_eval(*e, qs, o);
  std::size_t sem = 0;
  for (const auto& q : qs) sem += q.gold_route == RoutePath::kSemantic;
  EXPECT_DOUBLE_EQ(r.routing.accuracy, double(sem) / double(qs.size()));
  for (const auto& d : r.details) EXPECT_EQ(d["predicted_route"], "semantic");
}

TEST(RunEval, NoDrainDegradesRouting) {
  auto qs = mini();
  auto e = mini_engine();
  EvalOptions full, nd;
  nd.condition = Ablation::kNoDrain;
  double a_full = run_eval(*e, qs, full).routing.accuracy;
  MetricsReport r = run_eval(*e, qs, nd);
  EXPECT_LT(r.routing.accuracy, a_full);
  for (const auto& d : r.details) {
    if (d["predicted_route"] == "sql") EXPECT_TRUE(d["route"].is_object());
  }
}

TEST(RunEval, DetailsAreByteIdenticalAcrossRuns) {
  auto qs = mini();
  auto base = std::filesystem::temp_directory_path() / "logrouter_eval_det";
  std::filesystem::remove_all(base);
  for (const char* run : {"a", "b"}) {
    auto e = mini_engine();
    EvalOptions o;
    o.out_dir = base / run;
    run_eval(*e, qs, o);
  }
  std::string a = slurp(base / "a" / "details.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(base / "b" / "details.jsonl"));
  for (const char* f : {"report.json", "report.md", "latencies.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(base / "a" / f)) << f;
  }
  auto report = nlohmann::json::parse(slurp(base / "a" / "report.json"));
  EXPECT_TRUE(report["extensions"]["bertscore_f1"].is_null());
  std::filesystem::remove_all(base);
}

TEST(RunEval, OfflineNeverTouchesOnlineIndexes) {
  auto qs = mini();
  auto e = mini_engine();
  AccessCounts before = e->access_counts();
  EvalOptions o;
  o.mode = EvalMode::kOffline;
  o.data_root = fixtures::mini_dir();
  MetricsReport r = run_eval(*e, qs, o);
  EXPECT_EQ(e->access_counts(), before);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.retrieval.n, 6u);
  for (const auto& d : r.details) EXPECT_EQ(d["evidence"].size(), 10u);
}

TEST(RunEval, OfflineMissingDatasetIsRecorded) {
  QuestionRecord q;
  q.id = "x";
  q.dataset = "absent";
  q.question = "Why?";
  auto e = fixtures::offline_engine();
  EvalOptions o;
  o.mode = EvalMode::kOffline;
  o.data_root = fixtures::mini_dir();
  MetricsReport r = run_eval(*e, {q, q}, o);
  EXPECT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.n, 2u);
}
