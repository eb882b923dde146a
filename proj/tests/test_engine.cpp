#include <gtest/gtest.h>

#include <set>

#include "logrouter/error.hpp"
#include "support.hpp"

using namespace logrouter;

class EngineFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { engine_ = fixtures::linux_engine().release(); }
  static void TearDownTestSuite() { delete engine_; }
  static Engine* engine_;
};
Engine* EngineFixture::engine_ = nullptr;

TEST_F(EngineFixture, IngestPopulatesEveryIndex) {
  IndexCounts c = engine_->counts();
  EXPECT_EQ(c.records, 2000u);
  EXPECT_EQ(c.chunks, 91u);
  EXPECT_EQ(c.vectors, c.chunks);
  EXPECT_GT(c.templates, 5u);
  nlohmann::json h = engine_->health();
  EXPECT_EQ(h["status"], "ok");
}

TEST_F(EngineFixture, KeywordPathReturnsMatchedLines) {
  QueryResponse r = engine_->answer_query("Show entries matching \"check pass\"");
  EXPECT_EQ(r.route.path, RoutePath::kKeyword);
  ASSERT_EQ(r.evidence.size(), 20u);
  for (const auto& e : r.evidence) EXPECT_NE(e.text.find("check pass"), std::string::npos);
  EXPECT_NE(r.answer.find("MATCHES: 20"), std::string::npos);
  EXPECT_TRUE(r.latencies.count("keyword_search"));
  EXPECT_FALSE(r.l2);
}

TEST_F(EngineFixture, AttributeQuestionSearchesByShape) {
  QueryResponse r = engine_->answer_query("What is the IP address?");
  ASSERT_FALSE(r.evidence.empty());
  for (const auto& e : r.evidence) EXPECT_TRUE(std::regex_search(e.text, std::regex(R"(\d+\.\d+\.\d+\.\d+)")));
}

TEST_F(EngineFixture, AbsentLiteralReportsNoMatch) {
  QueryResponse r = engine_->answer_query("Find lines containing error 503");
  EXPECT_EQ(r.route.path, RoutePath::kKeyword);
  EXPECT_TRUE(r.evidence.empty());
  EXPECT_EQ(r.answer, "No matching log lines for \"error 503\".");
}

TEST_F(EngineFixture, SemanticPathUsesL2Tier) {
  QueryResponse r = engine_->answer_query("Why are there so many authentication failures from remote hosts?");
  EXPECT_EQ(r.route.path, RoutePath::kSemantic);
  ASSERT_TRUE(r.l2);
  EXPECT_EQ(r.tier, ModelTier::kSmall);
  EXPECT_EQ(r.evidence.size(), 10u);
  EXPECT_EQ(r.answer, "STUB[small] evidence=10 q=why are there so many authentication");
  for (const char* s : {"l1_route", "l2_route", "semantic_search", "llm_generate", "total"}) {
    EXPECT_TRUE(r.latencies.count(s)) << s;
  }
}

TEST_F(EngineFixture, GeneralPathSkipsRetrieval) {
  QueryResponse r = engine_->answer_query("hello");
  EXPECT_EQ(r.route.path, RoutePath::kGeneral);
  EXPECT_TRUE(r.evidence.empty());
  EXPECT_FALSE(r.latencies.count("semantic_search"));
  EXPECT_EQ(r.answer, "STUB[small] evidence=0 q=hello");
}

TEST_F(EngineFixture, RejectedTermDowngradesToSemantic) {
  QueryResponse r = engine_->answer_query("Find lines containing x'; DROP TABLE logs --");
  EXPECT_EQ(r.route.path, RoutePath::kSemantic);
  EXPECT_TRUE(r.rejected_term);
}

TEST_F(EngineFixture, EmptyQuestionIsInputError) {
  EXPECT_THROW(engine_->answer_query(""), Error);
}

TEST_F(EngineFixture, ExplainTouchesNoIndex) {
  AccessCounts before = engine_->access_counts();
  Explanation e = engine_->explain("How many ERROR events occurred in the last hour?");
  EXPECT_EQ(e.route.path, RoutePath::kSql);
  EXPECT_EQ(engine_->access_counts(), before);
}

TEST_F(EngineFixture, DatasetFilter) {
  QueryOptions o;
  o.dataset = "nope";
  QueryResponse r = engine_->answer_query("Why do hard disk devices stop responding?", o);
  EXPECT_TRUE(r.evidence.empty());
  o.dataset = "linux";
  EXPECT_FALSE(engine_->answer_query("Why do hard disk devices stop responding?", o).evidence.empty());
}

TEST_F(EngineFixture, TraceIdsAreUuidV4AndSeeded) {
  auto a = fixtures::offline_engine(fixtures::offline_config(42));
  auto b = fixtures::offline_engine(fixtures::offline_config(42));
  std::set<std::string> seen;
  for (int i = 0; i < 5; ++i) {
    std::string ia = a->answer_query("hello").trace_id;
    EXPECT_TRUE(is_uuid_v4(ia)) << ia;
    EXPECT_EQ(ia, b->answer_query("hello").trace_id);
    seen.insert(ia);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Engine, TraceSinkGetsEveryStage) {
  auto sink = std::make_shared<MemoryTraceSink>();
  auto e = fixtures::linux_engine(fixtures::offline_config(), sink);
  QueryResponse r = e->answer_query("How many ERROR events occurred in the last hour?");
  std::set<std::string> stages;
  for (const StageTrace& t : sink->for_trace(r.trace_id)) stages.insert(t.stage);
  for (const char* s : {"l1_route", "sql_template_lookup", "sql_generate", "sql_execute", "total"}) {
    EXPECT_TRUE(stages.count(s)) << s;
  }
  EXPECT_FALSE(stages.count("llm_generate"));
}

TEST(Engine, Ablations) {
  auto e = fixtures::linux_engine();
  const std::vector<std::string> qs = {"What process crashed?", "How many ERROR events occurred in the last hour?",
                                       "Summarize and compare error patterns across multiple services over the "
                                       "last 24h and correlate with restarts",
                                       "Why do hard disk devices stop responding?"};
  for (const std::string& q : qs) {
    QueryOptions o;
    o.ablation = Ablation::kNoL1;
    EXPECT_EQ(e->answer_query(q, o).route.path, RoutePath::kSemantic) << q;
    o.ablation = Ablation::kKeywordOnly;
    QueryResponse kw = e->answer_query(q, o);
    EXPECT_EQ(kw.route.path, RoutePath::kKeyword) << q;
    o.ablation = Ablation::kNoL2;
    QueryResponse small = e->answer_query(q, o);
    if (small.route.path == RoutePath::kSemantic) EXPECT_EQ(small.tier, ModelTier::kSmall);
    o.ablation = Ablation::kAlwaysLarge;
    QueryResponse large = e->answer_query(q, o);
    if (large.route.path == RoutePath::kSemantic) EXPECT_EQ(large.tier, ModelTier::kLarge);
    o.ablation = Ablation::kSemanticOnly;
    QueryResponse sem = e->answer_query(q, o);
    EXPECT_EQ(sem.route.path, RoutePath::kSemantic);
    EXPECT_EQ(sem.strategy, RetrievalStrategy::kDenseOnly);
  }
  QueryOptions full;
  EXPECT_EQ(e->answer_query(qs[2], full).tier, ModelTier::kLarge);
  QueryOptions no_drain;
  no_drain.ablation = Ablation::kNoDrain;
  QueryResponse nd = e->answer_query("How many times did the authentication failure template occur?", no_drain);
  EXPECT_EQ(nd.route.path, RoutePath::kSql);
  EXPECT_TRUE(nd.sql_templates.empty());
  EXPECT_EQ(e->answer_query("What process crashed?", no_drain).route.path, RoutePath::kSemantic);
}

TEST(Engine, AblationNames) {
  EXPECT_EQ(all_ablations().size(), 9u);
  for (Ablation a : all_ablations()) EXPECT_EQ(parse_ablation(ablation_name(a)), a);
  EXPECT_EQ(parse_ablation("no-l2"), Ablation::kNoL2);
  EXPECT_THROW(parse_ablation("no_such"), Error);
}

TEST(Engine, SnapshotRoundTrip) {
  auto e = fixtures::linux_engine();
  e->freeze_drain();
  auto dir = std::filesystem::temp_directory_path() / "logrouter_snapshot_test";
  std::filesystem::remove_all(dir);
  e->save(dir);
  auto back = fixtures::offline_engine();
  back->load(dir);
  std::filesystem::remove_all(dir);
  EXPECT_EQ(back->counts().records, e->counts().records);
  EXPECT_EQ(back->counts().chunks, e->counts().chunks);
  EXPECT_EQ(back->templates(), e->templates());
  EXPECT_TRUE(back->drain_frozen());
  for (const char* q : {"How many lines per level?", "Show entries matching \"check pass\"",
                        "Why do hard disk devices stop responding?"}) {
    EXPECT_EQ(back->answer_query(q).answer, e->answer_query(q).answer) << q;
  }
}

TEST(Engine, FrozenMinerAnnotatesLaterIngest) {
  auto e = fixtures::linux_engine();
  e->freeze_drain();
  std::size_t before = e->templates().size();
  SourceDescriptor src;
  src.dataset = "extra";
  IngestSummary s = e->ingest_lines({"Jul 27 10:00:00 combo cups: cupsd shutdown succeeded",
                                     "brand new never seen message shape one two three"},
                                    src);
  EXPECT_EQ(s.report.records, 2u);
  EXPECT_EQ(e->templates().size(), before);
}

TEST(Engine, EmbedFailureStillIndexesChunks) {
  auto e = std::make_unique<Engine>(fixtures::offline_config(), std::make_shared<fixtures::DownEmbedder>(),
                                    std::make_shared<StubGenerator>());
  IngestSummary s = e->ingest_file(fixtures::linux_fixture(), fixtures::linux_source());
  EXPECT_EQ(s.chunks, 91u);
  EXPECT_EQ(s.embedded, 0u);
  EXPECT_EQ(s.embed_failures, 91u);
  QueryResponse r = e->answer_query("Why do hard disk devices stop responding?");
  EXPECT_TRUE(r.degraded);
  EXPECT_EQ(r.strategy, RetrievalStrategy::kKeywordOnly);
  EXPECT_FALSE(r.evidence.empty());
}

TEST(Engine, GeneratorDownDegradesGracefully) {
  auto e = fixtures::linux_engine();
  e->set_generator(std::make_shared<fixtures::DownGenerator>());
  QueryResponse r = e->answer_query("Why do hard disk devices stop responding?");
  EXPECT_TRUE(r.degraded);
  EXPECT_EQ(r.answer, "Service unavailable: the answer generator could not be reached.");
  QueryResponse kw = e->answer_query("Show entries matching \"check pass\"");
  EXPECT_TRUE(kw.degraded);
  EXPECT_FALSE(kw.evidence.empty());
}
