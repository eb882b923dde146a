#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "logrouter/chunker.hpp"
#include "logrouter/retrieval.hpp"
#include "support.hpp"

using namespace logrouter;

TEST(Rrf, MatchesBruteForce) {
  std::mt19937 rng(60);
  for (int fixture = 0; fixture < 200; ++fixture) {
    int n_lists = 1 + static_cast<int>(rng() % 4);
    std::vector<RankedList> lists;
    for (int l = 0; l < n_lists; ++l) {
      RankedList rl;
      rl.source = static_cast<RankSource>(l % 3);
      std::vector<int> ids(40);
      for (int i = 0; i < 40; ++i) ids[i] = i;
      std::shuffle(ids.begin(), ids.end(), rng);
      int len = static_cast<int>(rng() % 25);
      for (int i = 0; i < len; ++i) rl.items.emplace_back("d" + std::to_string(ids[i]), 1.0 / (i + 1));
      lists.push_back(rl);
    }
    // Oracle: accumulate 1 / (60 + rank) per list, then sort.
    std::map<std::string, double> score;
    for (const auto& rl : lists) {
      for (std::size_t r = 0; r < rl.items.size(); ++r) score[rl.items[r].first] += 1.0 / (60.0 + double(r + 1));
    }
    std::vector<std::pair<std::string, double>> expected(score.begin(), score.end());
    std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    FusedResult got = rrf_fuse(lists, 60);
    ASSERT_EQ(got.items.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      ASSERT_EQ(got.items[i].id, expected[i].first) << "fixture " << fixture << " pos " << i;
      ASSERT_NEAR(got.items[i].rrf_score, expected[i].second, 1e-12);
    }
  }
}

TEST(Rrf, TiesByIdAndSources) {
  RankedList a{RankSource::kDense, {{"b", 1}, {"a", 0.5}}};
  RankedList b{RankSource::kFts, {{"a", 9}, {"b", 1}}};
  FusedResult r = rrf_fuse({a, b});
  ASSERT_EQ(r.items.size(), 2u);
  EXPECT_EQ(r.items[0].id, "a");
  EXPECT_EQ(r.items[0].sources.size(), 2u);
  EXPECT_TRUE(rrf_fuse({}).items.empty());
}

TEST(Retrieval, QuotedLiterals) {
  EXPECT_EQ(extract_quoted_literals(R"(why "disk full" and 'oom' "open)"),
            (std::vector<std::string>{"disk full", "oom"}));
}

TEST(Retrieval, StrategyNames) {
  EXPECT_EQ(parse_strategy("dense-only"), RetrievalStrategy::kDenseOnly);
  EXPECT_EQ(parse_strategy("keyword_only"), RetrievalStrategy::kKeywordOnly);
  EXPECT_EQ(parse_strategy("hybrid"), RetrievalStrategy::kHybrid);
  EXPECT_FALSE(parse_strategy("magic"));
}

class RetrieverFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    auto records = fixtures::linux_records();
    embedder_ = std::make_shared<HashedEmbedder>();
    vectors_ = std::make_unique<VectorStore>(256, embedder_->tag());
    for (Chunk& c : chunk_records(records)) {
      vectors_->add(c, embedder_->embed(c.text));
      chunks_.add(std::move(c));
    }
  }
  ChunkIndex chunks_;
  std::unique_ptr<VectorStore> vectors_;
  std::shared_ptr<HashedEmbedder> embedder_;
};

TEST_F(RetrieverFixture, HybridFusesAllBackends) {
  Retriever r(chunks_, *vectors_, embedder_);
  RetrievalOptions o;
  RetrievalResult res = r.retrieve("why \"exited abnormally\" for logrotate", o);
  EXPECT_FALSE(res.degraded);
  EXPECT_EQ(res.lists.size(), 3u);
  ASSERT_EQ(res.chunks.size(), 10u);
  EXPECT_NE(res.chunks[0].chunk->text.find("exited abnormally"), std::string::npos);
  for (const auto& l : res.lists) EXPECT_LE(l.items.size(), 20u);
}

TEST_F(RetrieverFixture, DenseOnlyAndKeywordOnly) {
  Retriever r(chunks_, *vectors_, embedder_);
  RetrievalOptions o;
  o.strategy = RetrievalStrategy::kDenseOnly;
  auto dense = r.retrieve("kernel memory available", o);
  ASSERT_EQ(dense.lists.size(), 1u);
  EXPECT_EQ(dense.lists[0].source, RankSource::kDense);
  o.strategy = RetrievalStrategy::kKeywordOnly;
  auto kw = r.retrieve("kernel memory available", o);
  ASSERT_EQ(kw.lists.size(), 1u);
  EXPECT_EQ(kw.lists[0].source, RankSource::kFts);
}

TEST_F(RetrieverFixture, EmbedderDownFallsBackToKeyword) {
  Retriever r(chunks_, *vectors_, std::make_shared<fixtures::DownEmbedder>());
  for (auto s : {RetrievalStrategy::kHybrid, RetrievalStrategy::kDenseOnly}) {
    RetrievalOptions o;
    o.strategy = s;
    auto res = r.retrieve("authentication failure", o);
    EXPECT_TRUE(res.degraded);
    EXPECT_EQ(res.strategy_used, RetrievalStrategy::kKeywordOnly);
    EXPECT_FALSE(res.chunks.empty());
  }
}

TEST_F(RetrieverFixture, MetadataFilters) {
  Retriever r(chunks_, *vectors_, embedder_);
  RetrievalOptions o;
  o.filters["dataset"] = "other";
  EXPECT_TRUE(r.retrieve("authentication failure", o).chunks.empty());
  o.filters["dataset"] = "linux";
  EXPECT_FALSE(r.retrieve("authentication failure", o).chunks.empty());
}
