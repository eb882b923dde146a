#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "logrouter/drain.hpp"
#include "logrouter/record.hpp"

namespace logrouter {

// One annotated line as the SQL backend sees it.
struct StructuredRow {
  std::optional<Timestamp> ts;
  std::string namespace_;
  std::string app;
  std::string pod;
  std::string container;
  Severity level = Severity::kUnknown;
  std::string line;
  std::string template_id;
  std::string dataset;
  std::size_t line_no = 0;

  static StructuredRow from(const AnnotatedRecord& annotated);
  bool operator==(const StructuredRow&) const = default;
};

nlohmann::json row_to_json(const StructuredRow& row);
StructuredRow row_from_json(const nlohmann::json& j);

// Queryable columns. `ts` only takes the time-window predicate.
enum class Column { kTs, kNamespace, kApp, kPod, kContainer, kLevel, kLine, kTemplateId, kDataset };

std::string_view column_name(Column c);
// Throws kInvalidQuery for anything else.
Column parse_column(std::string_view name);

struct EqualsPredicate {
  Column column;
  std::string literal;
  bool operator==(const EqualsPredicate&) const = default;
};

// SQL LIKE: '%' any run, '_' any single byte. Case sensitive.
struct LikePredicate {
  Column column;
  std::string pattern;
  bool operator==(const LikePredicate&) const = default;
};

// Inclusive on both ends; rows without a timestamp never match.
struct TimeWindowPredicate {
  Timestamp from;
  Timestamp to;
  bool operator==(const TimeWindowPredicate&) const = default;
};

struct LevelPredicate {
  Severity level;
  bool operator==(const LevelPredicate&) const = default;
};

using Predicate =
    std::variant<EqualsPredicate, LikePredicate, TimeWindowPredicate, LevelPredicate>;

bool like_match(std::string_view text, std::string_view pattern);

enum class Aggregation { kCount, kCountGroupBy, kTopK, kPercentage };

// The only query shapes the SQL backend accepts.
struct RestrictedQuery {
  Aggregation aggregation = Aggregation::kCount;
  std::optional<Column> group_column;  // COUNT-GROUP-BY and TOP-K
  std::size_t k = 0;                   // TOP-K
  std::vector<Predicate> percentage_of;  // PERCENTAGE numerator
  std::vector<Predicate> where;
  std::optional<std::size_t> limit;

  bool operator==(const RestrictedQuery&) const = default;
};

struct GroupCount {
  std::string group;
  std::int64_t count = 0;
  bool operator==(const GroupCount&) const = default;
};

using QueryResult = std::variant<std::int64_t, double, std::vector<GroupCount>>;

// Renders the result exactly as it is returned to the user: an integer, a
// percentage with two decimals, or one "group: count" line per group.
std::string format_result(const QueryResult& result);

class RowStore {
 public:
  RowStore() = default;
  RowStore(const RowStore&) = delete;
  RowStore& operator=(const RowStore&) = delete;

  void add(StructuredRow row);
  // Re-points row i at a template after the miner has evolved.
  void set_template_id(std::size_t i, std::string template_id);
  const std::vector<StructuredRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  std::optional<Timestamp> latest_ts() const;

  std::size_t access_count() const { return accesses_.load(); }
  void touch() const { ++accesses_; }

  // Newline-delimited JSON, one row per line.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<StructuredRow> rows_;
  std::optional<Timestamp> latest_;
  mutable std::atomic<std::size_t> accesses_{0};
};

bool row_matches(const StructuredRow& row, const std::vector<Predicate>& preds);

// Throws kEmptyStore for PERCENTAGE over zero rows and kInvalidQuery for a
// grouped aggregation without a column.
QueryResult execute_restricted(const RestrictedQuery& q, const RowStore& rows);

// Templates whose string matches `pattern`, unioned with the templates of
// rows whose line matches, deduplicated by id and ordered by match_count
// descending then id. Throws kInvalidPattern.
std::vector<Template> template_lookup(const std::string& pattern,
                                      const std::vector<Template>& catalogue,
                                      const RowStore& rows,
                                      bool case_insensitive = true);

// SQL text <-> RestrictedQuery. The parser accepts exactly the shapes that
// render_sql produces (modulo whitespace, keyword case and a trailing ';')
// and throws kSqlUnparseable for anything else.
inline constexpr std::string_view kLogsTable = "logs_raw";
std::string render_sql(const RestrictedQuery& q);
RestrictedQuery parse_restricted_sql(std::string_view sql);

}  // namespace logrouter
