#include <cctype>
#include <string>
#include <vector>

#include "logrouter/error.hpp"
#include "logrouter/row_store.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

namespace {

std::string quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

std::string render_predicate(const Predicate& pred) {
  return std::visit(
      [](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, EqualsPredicate>) {
          return std::string(column_name(p.column)) + " = " + quote(p.literal);
        } else if constexpr (std::is_same_v<P, LikePredicate>) {
          return std::string(column_name(p.column)) + " LIKE " + quote(p.pattern);
        } else if constexpr (std::is_same_v<P, TimeWindowPredicate>) {
          return "ts BETWEEN " + quote(format_iso8601(p.from)) + " AND " + quote(format_iso8601(p.to));
        } else {
          return "level = " + quote(severity_name(p.level));
        }
      },
      pred);
}

std::string render_conjunction(const std::vector<Predicate>& preds) {
  std::string out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (i) out += " AND ";
    out += render_predicate(preds[i]);
  }
  return out;
}

enum class TokKind { kWord, kNumber, kString, kSymbol, kEnd };

struct Tok {
  TokKind kind;
  std::string text;
  std::size_t pos;
};

[[noreturn]] void fail(const std::string& what, std::size_t pos) {
  throw Error(ErrorCode::kSqlUnparseable, what + " at offset " + std::to_string(pos));
}

std::vector<Tok> lex(std::string_view sql) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < sql.size()) {
    const char c = sql[i];
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') fail("comment sequence '--' rejected", i);
    if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') fail("comment sequence '/*' rejected", i);
    if (std::isalpha(u) || c == '_') {
      std::size_t j = i;
      while (j < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_')) ++j;
      out.push_back({TokKind::kWord, std::string(sql.substr(i, j - i)), i});
      i = j;
    } else if (std::isdigit(u)) {
      std::size_t j = i;
      while (j < sql.size() && (std::isdigit(static_cast<unsigned char>(sql[j])) || sql[j] == '.')) ++j;
      out.push_back({TokKind::kNumber, std::string(sql.substr(i, j - i)), i});
      i = j;
    } else if (c == '\'') {
      std::string lit;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < sql.size()) {
        if (sql[j] == '\'') {
          if (j + 1 < sql.size() && sql[j + 1] == '\'') {
            lit += '\'';
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        lit += sql[j++];
      }
      if (!closed) fail("unterminated string literal", i);
      out.push_back({TokKind::kString, std::move(lit), i});
      i = j;
    } else if (std::string_view("(),*=/;").find(c) != std::string_view::npos) {
      out.push_back({TokKind::kSymbol, std::string(1, c), i});
      ++i;
    } else {
      fail(std::string("unexpected character '") + c + "'", i);
    }
  }
  if (!out.empty() && out.back().kind == TokKind::kSymbol && out.back().text == ";") out.pop_back();
  for (const auto& t : out) {
    if (t.kind == TokKind::kSymbol && t.text == ";") fail("multiple statements rejected", t.pos);
  }
  out.push_back({TokKind::kEnd, "", sql.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  RestrictedQuery parse() {
    RestrictedQuery q;
    keyword("SELECT");
    if (peek_keyword("COUNT")) {
      count_star();
      q.aggregation = Aggregation::kCount;
      from_where(q);
    } else if (peek().kind == TokKind::kNumber) {
      const Tok n = next();
      if (n.text != "100" && n.text != "100.0") fail("expected 100.0 scale factor", n.pos);
      symbol("*");
      keyword("SUM");
      symbol("(");
      keyword("CASE");
      keyword("WHEN");
      q.percentage_of = conjunction();
      keyword("THEN");
      expect_number("1");
      keyword("ELSE");
      expect_number("0");
      keyword("END");
      symbol(")");
      symbol("/");
      count_star();
      q.aggregation = Aggregation::kPercentage;
      from_where(q);
    } else if (peek().kind == TokKind::kWord) {
      const Tok col = next();
      const Column group = column(col);
      symbol(",");
      count_star();
      keyword("AS");
      const Tok alias = word();
      from_where(q);
      keyword("GROUP");
      keyword("BY");
      const Tok col2 = word();
      if (column(col2) != group) fail("GROUP BY column differs from selected column", col2.pos);
      keyword("ORDER");
      keyword("BY");
      const Tok alias2 = word();
      if (to_lower(alias2.text) != to_lower(alias.text)) fail("ORDER BY must use the count alias", alias2.pos);
      keyword("DESC");
      q.group_column = group;
      q.aggregation = Aggregation::kCountGroupBy;
      if (peek_keyword("LIMIT")) {
        next();
        const Tok k = next();
        if (k.kind != TokKind::kNumber || k.text.find('.') != std::string::npos) fail("LIMIT needs an integer", k.pos);
        q.aggregation = Aggregation::kTopK;
        q.k = std::stoul(k.text);
        if (q.k == 0) fail("LIMIT must be positive", k.pos);
      }
    } else {
      fail("unsupported SELECT list", peek().pos);
    }
    if (peek().kind != TokKind::kEnd) fail("unexpected trailing input '" + peek().text + "'", peek().pos);
    return q;
  }

 private:
  const Tok& peek() const { return toks_[i_]; }
  Tok next() {
    Tok t = toks_[i_];
    if (t.kind != TokKind::kEnd) ++i_;
    return t;
  }
  bool peek_keyword(std::string_view kw) const {
    return peek().kind == TokKind::kWord && to_upper(peek().text) == kw;
  }
  void keyword(std::string_view kw) {
    if (!peek_keyword(kw)) fail("expected " + std::string(kw), peek().pos);
    next();
  }
  void symbol(std::string_view s) {
    if (peek().kind != TokKind::kSymbol || peek().text != s) fail("expected '" + std::string(s) + "'", peek().pos);
    next();
  }
  void expect_number(std::string_view n) {
    if (peek().kind != TokKind::kNumber || peek().text != n) fail("expected " + std::string(n), peek().pos);
    next();
  }
  Tok word() {
    if (peek().kind != TokKind::kWord) fail("expected identifier", peek().pos);
    return next();
  }
  Tok string_lit() {
    if (peek().kind != TokKind::kString) fail("expected string literal", peek().pos);
    return next();
  }
  Column column(const Tok& t) {
    try {
      return parse_column(to_lower(t.text));
    } catch (const Error&) {
      fail("unknown column '" + t.text + "'", t.pos);
    }
  }
  void count_star() {
    keyword("COUNT");
    symbol("(");
    symbol("*");
    symbol(")");
  }
  void from_where(RestrictedQuery& q) {
    keyword("FROM");
    const Tok table = word();
    if (table.text != kLogsTable) fail("unknown table '" + table.text + "'", table.pos);
    if (peek_keyword("WHERE")) {
      next();
      q.where = conjunction();
    }
  }
  std::vector<Predicate> conjunction() {
    std::vector<Predicate> preds;
    preds.push_back(predicate());
    while (peek_keyword("AND")) {
      next();
      preds.push_back(predicate());
    }
    return preds;
  }
  Predicate predicate() {
    const Tok col_tok = word();
    const Column col = column(col_tok);
    if (col == Column::kTs) {
      keyword("BETWEEN");
      const Tok a = string_lit();
      keyword("AND");
      const Tok b = string_lit();
      auto from = parse_iso8601(a.text);
      auto to = parse_iso8601(b.text);
      if (!from || !to) fail("BETWEEN bounds must be ISO-8601 timestamps", a.pos);
      return TimeWindowPredicate{*from, *to};
    }
    if (peek_keyword("LIKE")) {
      next();
      return LikePredicate{col, string_lit().text};
    }
    symbol("=");
    const Tok lit = string_lit();
    if (col == Column::kLevel) {
      auto level = parse_severity(lit.text);
      if (!level) fail("unknown level '" + lit.text + "'", lit.pos);
      return LevelPredicate{*level};
    }
    return EqualsPredicate{col, lit.text};
  }

  std::vector<Tok> toks_;
  std::size_t i_ = 0;
};

}  // namespace

std::string render_sql(const RestrictedQuery& q) {
  const std::string from = " FROM " + std::string(kLogsTable);
  const std::string where = q.where.empty() ? "" : " WHERE " + render_conjunction(q.where);
  switch (q.aggregation) {
    case Aggregation::kCount:
      return "SELECT COUNT(*)" + from + where;
    case Aggregation::kPercentage:
      return "SELECT 100.0 * SUM(CASE WHEN " + render_conjunction(q.percentage_of) +
             " THEN 1 ELSE 0 END) / COUNT(*)" + from + where;
    case Aggregation::kCountGroupBy:
    case Aggregation::kTopK: {
      if (!q.group_column) throw Error(ErrorCode::kInvalidQuery, "grouped aggregation needs a column");
      const std::string col(column_name(*q.group_column));
      std::string sql = "SELECT " + col + ", COUNT(*) AS cnt" + from + where + " GROUP BY " + col +
                        " ORDER BY cnt DESC";
      std::optional<std::size_t> limit = q.limit;
      if (q.aggregation == Aggregation::kTopK) limit = limit ? std::min(*limit, q.k) : q.k;
      if (limit) sql += " LIMIT " + std::to_string(*limit);
      return sql;
    }
  }
  throw Error(ErrorCode::kInvalidQuery, "unsupported aggregation");
}

RestrictedQuery parse_restricted_sql(std::string_view sql) {
  return Parser(lex(sql)).parse();
}

}  // namespace logrouter
