#include <gtest/gtest.h>

#include <random>

#include "logrouter/chunker.hpp"
#include "logrouter/error.hpp"

using namespace logrouter;

namespace {

std::vector<LogRecord> stream(std::size_t n, const std::string& pod = "p") {
  std::vector<LogRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    LogRecord r;
    r.dataset = "d";
    r.namespace_ = "ns";
    r.app = "a";
    r.pod = pod;
    r.line = "line " + std::to_string(i) + (i % 7 == 0 ? " ERROR" : " INFO");
    r.level = i % 7 == 0 ? Severity::kError : Severity::kInfo;
    r.line_no = i;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(Chunker, SixtyLineFixture) {
  auto chunks = chunk_records(stream(60));
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].start_line, 0u);
  EXPECT_EQ(chunks[1].start_line, 22u);
  EXPECT_EQ(chunks[2].start_line, 44u);
  EXPECT_EQ(chunks[0].line_count, 25u);
  EXPECT_EQ(chunks[1].line_count, 25u);
  EXPECT_EQ(chunks[2].line_count, 16u);
  EXPECT_EQ(chunks[1].chunk_id, "d:ns/a/p:22");
  EXPECT_EQ(chunks[0].dominant_level(), Severity::kError);
}

TEST(Chunker, ShortStreamIsOneChunk) {
  auto chunks = chunk_records(stream(10));
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].line_count, 10u);
  EXPECT_TRUE(chunk_records({}).empty());
}

TEST(Chunker, InvalidParams) {
  ChunkerParams p;
  p.overlap = 25;
  EXPECT_THROW(p.validate(), Error);
  p.overlap = -1;
  EXPECT_THROW(p.validate(), Error);
}

// Every line is covered and neighbours share exactly `overlap` lines.
TEST(Chunker, CoverageAndOverlapProperty) {
  std::mt19937 rng(2024);
  ChunkerParams p;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng() % 400;
    auto bounds = window_bounds(n, p);
    std::vector<int> cover(n, 0);
    for (auto [start, len] : bounds) {
      ASSERT_LE(start + len, n);
      ASSERT_LE(len, 25u);
      for (std::size_t i = start; i < start + len; ++i) ++cover[i];
    }
    for (std::size_t i = 0; i < n; ++i) ASSERT_GE(cover[i], 1) << "n=" << n << " i=" << i;
    for (std::size_t c = 1; c < bounds.size(); ++c) {
      auto [ps, pl] = bounds[c - 1];
      auto [s, l] = bounds[c];
      ASSERT_EQ(ps + pl - s, 3u) << "n=" << n;
      ASSERT_EQ(s, ps + 22);
    }
  }
}

TEST(Chunker, TextJoinsLinesAndStreamsSplitBySource) {
  auto a = stream(30, "p1");
  auto b = stream(5, "p2");
  a.insert(a.end(), b.begin(), b.end());
  auto chunks = chunk_records(a);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[2].source_key, "ns/a/p2");
  EXPECT_EQ(chunks[2].text, "line 0 ERROR\nline 1 INFO\nline 2 INFO\nline 3 INFO\nline 4 INFO");
  EXPECT_EQ(chunk_from_json(chunk_to_json(chunks[0])), chunks[0]);
}
