#include <gtest/gtest.h>

#include <map>
#include <random>

#include "logrouter/error.hpp"
#include "logrouter/row_store.hpp"
#include "logrouter/timestamp.hpp"
#include "support.hpp"

using namespace logrouter;

TEST(RestrictedSql, RenderParseRoundTrip) {
  RestrictedQuery q;
  q.aggregation = Aggregation::kTopK;
  q.group_column = Column::kApp;
  q.k = 3;
  q.where = {LevelPredicate{Severity::kError}, EqualsPredicate{Column::kDataset, "linux"},
             LikePredicate{Column::kLine, "%disk%"},
             TimeWindowPredicate{make_timestamp(2024, 1, 1), make_timestamp(2024, 1, 2)}};
  EXPECT_EQ(parse_restricted_sql(render_sql(q)), q);
  RestrictedQuery p;
  p.aggregation = Aggregation::kPercentage;
  p.percentage_of = {LevelPredicate{Severity::kWarn}};
  EXPECT_EQ(parse_restricted_sql(render_sql(p) + " ;"), p);
}

TEST(RestrictedSql, RejectsAnythingElse) {
  for (const char* bad : {"DROP TABLE logs_raw", "SELECT * FROM logs_raw", "SELECT COUNT(*) FROM users",
                          "SELECT COUNT(*) FROM logs_raw; DELETE FROM logs_raw", "",
                          "SELECT COUNT(*) FROM logs_raw WHERE level = 'ERROR' OR 1=1"}) {
    try {
      parse_restricted_sql(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSqlUnparseable) << bad;
    }
  }
}

TEST(RestrictedSql, LikeMatch) {
  EXPECT_TRUE(like_match("disk full", "%full"));
  EXPECT_TRUE(like_match("disk full", "d_sk%"));
  EXPECT_FALSE(like_match("disk full", "Disk%"));
  EXPECT_TRUE(like_match("", "%"));
  EXPECT_FALSE(like_match("abc", "ab"));
}

TEST(RestrictedSql, ExecuteAndFormat) {
  RowStore rows;
  for (int i = 0; i < 10; ++i) {
    StructuredRow r;
    r.level = i < 3 ? Severity::kError : Severity::kInfo;
    r.app = i % 2 ? "web" : "db";
    r.line = "x";
    rows.add(r);
  }
  RestrictedQuery c;
  EXPECT_EQ(format_result(execute_restricted(c, rows)), "10");
  RestrictedQuery g;
  g.aggregation = Aggregation::kCountGroupBy;
  g.group_column = Column::kLevel;
  EXPECT_EQ(format_result(execute_restricted(g, rows)), "INFO: 7\nERROR: 3");
  RestrictedQuery p;
  p.aggregation = Aggregation::kPercentage;
  p.percentage_of = {LevelPredicate{Severity::kError}};
  EXPECT_EQ(format_result(execute_restricted(p, rows)), "30.00%");
  RowStore empty;
  try {
    execute_restricted(p, empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyStore);
  }
  g.group_column.reset();
  EXPECT_THROW(execute_restricted(g, rows), Error);
}

namespace {

struct Row {
  Timestamp ts;
  std::string app;
  std::string level;
};

const std::vector<std::string> kApps = {"web", "db", "cache", "auth"};
const std::vector<std::string> kLevels = {"INFO", "WARN", "ERROR", "DEBUG"};

std::map<std::string, long> count_by(const std::vector<Row>& rows, bool by_app) {
  std::map<std::string, long> out;
  for (const Row& r : rows) ++out[by_app ? r.app : r.level];
  return out;
}

std::map<std::string, long> parse_groups(const std::string& answer) {
  std::map<std::string, long> out;
  std::istringstream in(answer);
  for (std::string line; std::getline(in, line);) {
    auto p = line.rfind(": ");
    out[line.substr(0, p)] = std::stol(line.substr(p + 2));
  }
  return out;
}

std::vector<long> counts_in_order(const std::string& answer) {
  std::vector<long> out;
  std::istringstream in(answer);
  for (std::string line; std::getline(in, line);) out.push_back(std::stol(line.substr(line.rfind(": ") + 2)));
  return out;
}

}  // namespace

// Randomized rows and questions; every answer is checked against a recount
// over the generated ground truth.
TEST(SqlPath, VerbatimAnswersMatchRecount) {
  std::mt19937 rng(8080);
  int asked = 0;
  for (int fixture = 0; fixture < 5; ++fixture) {
    std::vector<Row> truth;
    std::map<std::string, std::vector<std::string>> lines_by_app;
    Timestamp t = make_timestamp(2024, 5, 1);
    int n = 150 + static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) {
      t += std::chrono::seconds(rng() % 600);
      Row r{t, kApps[rng() % kApps.size()], kLevels[rng() % kLevels.size()]};
      truth.push_back(r);
      lines_by_app[r.app].push_back(format_iso8601(r.ts) + " " + r.level + " request handled id " +
                                    std::to_string(rng() % 100000));
    }
    auto engine = fixtures::offline_engine();
    for (const auto& [app, lines] : lines_by_app) {
      SourceDescriptor src;
      src.dataset = "fx";
      src.app = app;
      engine->ingest_lines(lines, src);
    }
    const Timestamp latest = truth.back().ts;

    for (int q = 0; q < 10; ++q, ++asked) {
      int kind = static_cast<int>(rng() % 6);
      std::string level = kLevels[rng() % kLevels.size()];
      std::string app = kApps[rng() % kApps.size()];
      std::string question;
      std::string expected;
      QueryResponse resp;
      switch (kind) {
        case 0: {
          question = "How many " + level + " lines were logged?";
          long c = 0;
          for (const Row& r : truth) c += r.level == level;
          expected = std::to_string(c);
          break;
        }
        case 1: {
          int hours = 1 + static_cast<int>(rng() % 12);
          question = "How many " + level + " events occurred in the last " + std::to_string(hours) + " hours?";
          long c = 0;
          for (const Row& r : truth) c += r.level == level && r.ts >= latest - std::chrono::hours(hours);
          expected = std::to_string(c);
          break;
        }
        case 2: {
          question = "How many lines with app=" + app + "?";
          long c = 0;
          for (const Row& r : truth) c += r.app == app;
          expected = std::to_string(c);
          break;
        }
        case 3: {
          bool by_app = rng() % 2;
          question = by_app ? "Count of lines by app" : "How many lines per level?";
          resp = engine->answer_query(question);
          EXPECT_EQ(parse_groups(resp.answer), count_by(truth, by_app)) << question;
          auto order = counts_in_order(resp.answer);
          EXPECT_TRUE(std::is_sorted(order.rbegin(), order.rend())) << resp.answer;
          break;
        }
        case 4: {
          std::size_t k = 1 + rng() % 4;
          question = "Show the top " + std::to_string(k) + " apps";
          resp = engine->answer_query(question);
          auto all = count_by(truth, true);
          std::vector<long> sorted;
          for (const auto& [name, c] : all) sorted.push_back(c);
          std::sort(sorted.rbegin(), sorted.rend());
          sorted.resize(std::min(k, sorted.size()));
          EXPECT_EQ(counts_in_order(resp.answer), sorted) << question << "\n" << resp.answer;
          for (const auto& [name, c] : parse_groups(resp.answer)) EXPECT_EQ(all[name], c);
          break;
        }
        default: {
          question = "What percentage of lines are " + level + "?";
          long c = 0;
          for (const Row& r : truth) c += r.level == level;
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * double(c) / double(truth.size()));
          expected = buf;
        }
      }
      if (kind != 3 && kind != 4) {
        resp = engine->answer_query(question);
        EXPECT_EQ(resp.answer, expected) << question << "\n" << resp.sql_text.value_or("");
      }
      EXPECT_EQ(resp.route.path, RoutePath::kSql) << question;
      EXPECT_FALSE(resp.degraded) << question << " " << resp.degraded_reason;
      EXPECT_TRUE(resp.latencies.count("sql_execute")) << question;
      EXPECT_FALSE(resp.latencies.count("llm_generate")) << question;
    }
  }
  EXPECT_EQ(asked, 50);
}

TEST(SqlPath, UnparseableSqlRetriedOnceThenDegrades) {
  class BadCoder final : public Generator {
   public:
    int calls = 0;
    std::string generate(const GenerationRequest& req) override {
      ++calls;
      if (calls == 2) EXPECT_TRUE(req.sql.previous_error.has_value());
      return "DELETE FROM logs_raw";
    }
  };
  auto engine = fixtures::linux_engine();
  auto coder = std::make_shared<BadCoder>();
  engine->set_generator(coder);
  QueryResponse r = engine->answer_query("How many ERROR events occurred in the last hour?");
  EXPECT_EQ(coder->calls, 2);
  EXPECT_TRUE(r.degraded);
  EXPECT_EQ(r.route.path, RoutePath::kSql);
}

TEST(SqlPath, TemplateLookupFeedsCoder) {
  auto engine = fixtures::linux_engine();
  QueryResponse r = engine->answer_query("How many times did the authentication failure template occur?");
  ASSERT_FALSE(r.sql_templates.empty());
  EXPECT_NE(r.sql_templates[0].find("authentication failure"), std::string::npos);
  ASSERT_TRUE(r.sql_text);
  long recount = 0;
  std::string id = r.sql_templates[0].substr(0, 8);
  EXPECT_NE(r.sql_text->find(id), std::string::npos);
  for (const Template& t : engine->templates()) {
    if (t.template_id == id) recount = static_cast<long>(t.match_count);
  }
  EXPECT_EQ(r.answer, std::to_string(recount));
}
