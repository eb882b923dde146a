#include "logrouter/row_store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>

#include "logrouter/error.hpp"

namespace logrouter {

using nlohmann::json;

StructuredRow StructuredRow::from(const AnnotatedRecord& annotated) {
  const LogRecord& r = annotated.record;
  StructuredRow row;
  row.ts = r.ts;
  row.namespace_ = r.namespace_;
  row.app = r.app;
  row.pod = r.pod;
  row.container = r.container;
  row.level = r.level;
  row.line = r.line;
  row.template_id = annotated.template_id;
  row.dataset = r.dataset;
  row.line_no = r.line_no;
  return row;
}

json row_to_json(const StructuredRow& row) {
  return {{"ts", row.ts ? json(format_iso8601(*row.ts)) : json(nullptr)},
          {"namespace", row.namespace_},
          {"app", row.app},
          {"pod", row.pod},
          {"container", row.container},
          {"level", std::string(severity_name(row.level))},
          {"line", row.line},
          {"template_id", row.template_id},
          {"dataset", row.dataset},
          {"line_no", row.line_no}};
}

StructuredRow row_from_json(const json& j) {
  StructuredRow row;
  if (j.contains("ts") && j["ts"].is_string()) row.ts = parse_iso8601(j["ts"].get<std::string>());
  row.namespace_ = j.value("namespace", "unknown");
  row.app = j.value("app", "unknown");
  row.pod = j.value("pod", "unknown");
  row.container = j.value("container", "unknown");
  row.level = parse_severity(j.value("level", "UNKNOWN")).value_or(Severity::kUnknown);
  row.line = j.at("line").get<std::string>();
  row.template_id = j.value("template_id", std::string(kUnmatchedTemplateId));
  row.dataset = j.value("dataset", "");
  row.line_no = j.value("line_no", std::size_t{0});
  return row;
}

std::string_view column_name(Column c) {
  switch (c) {
    case Column::kTs: return "ts";
    case Column::kNamespace: return "namespace";
    case Column::kApp: return "app";
    case Column::kPod: return "pod";
    case Column::kContainer: return "container";
    case Column::kLevel: return "level";
    case Column::kLine: return "line";
    case Column::kTemplateId: return "template_id";
    case Column::kDataset: return "dataset";
  }
  return "?";
}

Column parse_column(std::string_view name) {
  static const std::map<std::string_view, Column> kColumns = {
      {"ts", Column::kTs},         {"__time", Column::kTs},      {"namespace", Column::kNamespace},
      {"app", Column::kApp},       {"pod", Column::kPod},        {"container", Column::kContainer},
      {"level", Column::kLevel},   {"line", Column::kLine},      {"template_id", Column::kTemplateId},
      {"dataset", Column::kDataset}};
  auto it = kColumns.find(name);
  if (it == kColumns.end()) throw Error(ErrorCode::kInvalidQuery, "unknown column '" + std::string(name) + "'");
  return it->second;
}

namespace {

std::string column_value(const StructuredRow& row, Column c) {
  switch (c) {
    case Column::kTs: return row.ts ? format_iso8601(*row.ts) : std::string();
    case Column::kNamespace: return row.namespace_;
    case Column::kApp: return row.app;
    case Column::kPod: return row.pod;
    case Column::kContainer: return row.container;
    case Column::kLevel: return std::string(severity_name(row.level));
    case Column::kLine: return row.line;
    case Column::kTemplateId: return row.template_id;
    case Column::kDataset: return row.dataset;
  }
  return {};
}

}  // namespace

bool like_match(std::string_view text, std::string_view pattern) {
  // Iterative wildcard match with single-star backtracking.
  std::size_t t = 0, p = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
      ++t;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

bool row_matches(const StructuredRow& row, const std::vector<Predicate>& preds) {
  for (const auto& pred : preds) {
    const bool ok = std::visit(
        [&](const auto& p) -> bool {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, EqualsPredicate>) {
            return column_value(row, p.column) == p.literal;
          } else if constexpr (std::is_same_v<P, LikePredicate>) {
            return like_match(column_value(row, p.column), p.pattern);
          } else if constexpr (std::is_same_v<P, TimeWindowPredicate>) {
            return row.ts && *row.ts >= p.from && *row.ts <= p.to;
          } else {
            return row.level == p.level;
          }
        },
        pred);
    if (!ok) return false;
  }
  return true;
}

void RowStore::add(StructuredRow row) {
  if (row.ts && (!latest_ || *row.ts > *latest_)) latest_ = row.ts;
  rows_.push_back(std::move(row));
}

void RowStore::set_template_id(std::size_t i, std::string template_id) {
  rows_.at(i).template_id = std::move(template_id);
}

std::optional<Timestamp> RowStore::latest_ts() const { return latest_; }

void RowStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kStoreContract, "cannot write row snapshot " + path.string());
  for (const auto& r : rows_) out << row_to_json(r).dump() << '\n';
}

void RowStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kStoreContract, "cannot read row snapshot " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      add(row_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kStoreContract, "malformed row snapshot line: " + std::string(e.what()));
    }
  }
}

std::string format_result(const QueryResult& result) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<V, double>) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.2f%%", v);
          return buf;
        } else {
          if (v.empty()) return "(no rows)";
          std::string out;
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += '\n';
            out += v[i].group + ": " + std::to_string(v[i].count);
          }
          return out;
        }
      },
      result);
}

QueryResult execute_restricted(const RestrictedQuery& q, const RowStore& store) {
  store.touch();
  const auto& rows = store.rows();
  switch (q.aggregation) {
    case Aggregation::kCount: {
      std::int64_t n = 0;
      for (const auto& r : rows) n += row_matches(r, q.where) ? 1 : 0;
      return n;
    }
    case Aggregation::kPercentage: {
      if (rows.empty()) throw Error(ErrorCode::kEmptyStore, "PERCENTAGE over an empty store");
      std::int64_t total = 0, hit = 0;
      for (const auto& r : rows) {
        if (!row_matches(r, q.where)) continue;
        ++total;
        if (row_matches(r, q.percentage_of)) ++hit;
      }
      if (total == 0) throw Error(ErrorCode::kEmptyStore, "PERCENTAGE: no rows satisfy the WHERE clause");
      return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
    }
    case Aggregation::kCountGroupBy:
    case Aggregation::kTopK: {
      if (!q.group_column) throw Error(ErrorCode::kInvalidQuery, "grouped aggregation needs a column");
      if (*q.group_column == Column::kTs) throw Error(ErrorCode::kInvalidQuery, "cannot group by ts");
      std::map<std::string, std::int64_t> counts;
      for (const auto& r : rows) {
        if (row_matches(r, q.where)) ++counts[column_value(r, *q.group_column)];
      }
      std::vector<GroupCount> out;
      out.reserve(counts.size());
      for (auto& [g, n] : counts) out.push_back({g, n});
      std::stable_sort(out.begin(), out.end(),
                       [](const GroupCount& a, const GroupCount& b) { return a.count > b.count; });
      std::size_t cap = out.size();
      if (q.aggregation == Aggregation::kTopK) cap = std::min(cap, q.k);
      if (q.limit) cap = std::min(cap, *q.limit);
      out.resize(cap);
      return out;
    }
  }
  throw Error(ErrorCode::kInvalidQuery, "unsupported aggregation");
}

std::vector<Template> template_lookup(const std::string& pattern, const std::vector<Template>& catalogue,
                                      const RowStore& rows, bool case_insensitive) {
  std::regex re;
  try {
    auto flags = std::regex::ECMAScript;
    if (case_insensitive) flags |= std::regex::icase;
    re = std::regex(pattern, flags);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kInvalidPattern, "invalid pattern '" + pattern + "': " + e.what());
  }
  rows.touch();
  std::set<std::string> ids;
  for (const auto& t : catalogue) {
    if (std::regex_search(t.template_string, re)) ids.insert(t.template_id);
  }
  for (const auto& r : rows.rows()) {
    if (!ids.count(r.template_id) && std::regex_search(r.line, re)) ids.insert(r.template_id);
  }
  std::vector<Template> out;
  for (const auto& t : catalogue) {
    if (ids.count(t.template_id)) out.push_back(t);
  }
  std::sort(out.begin(), out.end(), [](const Template& a, const Template& b) {
    if (a.match_count != b.match_count) return a.match_count > b.match_count;
    return a.template_id < b.template_id;
  });
  return out;
}

}  // namespace logrouter
