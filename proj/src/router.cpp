#include "logrouter/router.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "logrouter/default_vocab.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

using nlohmann::json;

std::string_view route_path_name(RoutePath p) {
  switch (p) {
    case RoutePath::kGeneral: return "general";
    case RoutePath::kKeyword: return "keyword";
    case RoutePath::kSql: return "sql";
    case RoutePath::kSemantic: return "semantic";
  }
  return "semantic";
}

std::optional<RoutePath> parse_route_path(std::string_view s) {
  std::string v = to_lower(trim(s));
  if (v == "general") return RoutePath::kGeneral;
  if (v == "keyword") return RoutePath::kKeyword;
  if (v == "sql") return RoutePath::kSql;
  if (v == "semantic") return RoutePath::kSemantic;
  return std::nullopt;
}

std::string_view model_tier_name(ModelTier t) {
  switch (t) {
    case ModelTier::kSmall: return "small";
    case ModelTier::kLarge: return "large";
    case ModelTier::kCoder: return "coder";
  }
  return "small";
}

namespace {

constexpr auto kFlags = std::regex::ECMAScript | std::regex::icase;

std::regex compile(const std::string& id, const std::string& pattern) {
  try {
    return std::regex(pattern, kFlags);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kInvalidConfig,
                "vocabulary: pattern '" + id + "' does not compile: " + e.what());
  }
}

std::vector<Signal> parse_signals(const json& doc, const char* family) {
  if (!doc.contains(family) || !doc[family].is_array()) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("vocabulary: missing family '") + family + "'");
  }
  std::vector<Signal> out;
  for (const auto& e : doc[family]) {
    Signal s;
    s.id = e.at("id").get<std::string>();
    s.name = e.value("name", s.id);
    s.pattern = e.at("pattern").get<std::string>();
    s.term_group = e.value("term_group", 0);
    s.imperative = e.value("imperative", false);
    s.re = compile(s.id, s.pattern);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Signal> parse_terms(const json& doc, const char* family) {
  std::vector<Signal> out;
  const json& l2 = doc.at("l2");
  if (!l2.contains(family)) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("vocabulary: missing l2 family '") + family + "'");
  }
  int i = 0;
  for (const auto& p : l2[family]) {
    Signal s;
    s.id = std::string(family) + "_" + std::to_string(i++);
    s.name = s.id;
    s.pattern = p.get<std::string>();
    s.re = compile(s.id, s.pattern);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> lowered(const json& arr) {
  std::vector<std::string> out;
  for (const auto& w : arr) out.push_back(to_lower(w.get<std::string>()));
  return out;
}

bool in_range(double v) { return v > 0.0 && v <= 1.0; }

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords = {
      "a",    "an",   "the",  "this", "that", "these", "those", "is",  "are",
      "was",  "were", "be",   "been", "of",   "in",    "on",    "at",  "to",
      "for",  "with", "and",  "or",   "it",   "its",   "did",   "do",  "does",
      "what", "which", "when", "where", "who", "how",  "there", "here", "me",
      "all",  "any",  "some", "by",   "from", "about", "please"};
  return kWords;
}

std::string clean_term(std::string_view raw) {
  std::string_view t = trim(raw);
  while (!t.empty() && std::string_view("?.!,;").find(t.back()) != std::string_view::npos) {
    t.remove_suffix(1);
    t = trim(t);
  }
  std::vector<std::string> words = split_whitespace(t);
  static const std::set<std::string> kArticles = {"the", "a", "an", "this", "that"};
  std::size_t start = 0;
  while (start < words.size() && kArticles.count(to_lower(words[start]))) ++start;
  words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(start));
  return join(words, " ");
}

}  // namespace

SignalVocabulary SignalVocabulary::from_json(const json& doc) {
  SignalVocabulary v;
  try {
    v.version = doc.value("version", std::string("unversioned"));
    v.sql_signals = parse_signals(doc, "sql_signals");
    v.keyword_signals = parse_signals(doc, "keyword_signals");
    v.event_signals = parse_signals(doc, "event_signals");
    v.p7_starters = lowered(doc.at("p7_starters"));
    v.greeting_lexicon = lowered(doc.at("greeting_lexicon"));
    v.aggregation_terms = parse_terms(doc, "aggregation");
    v.temporal_terms = parse_terms(doc, "temporal");
    v.entity_terms = parse_terms(doc, "entity");
    v.schema_exclusion_pattern = doc.value("schema_exclusion_pattern", std::string());
    if (!v.schema_exclusion_pattern.empty()) {
      v.schema_exclusion_re = compile("schema_exclusion_pattern", v.schema_exclusion_pattern);
    }
    if (doc.contains("attribute_patterns")) {
      for (const auto& [k, p] : doc["attribute_patterns"].items()) {
        std::string pat = p.get<std::string>();
        compile("attribute_patterns." + k, pat);
        v.attribute_patterns[to_lower(k)] = pat;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("vocabulary: ") + e.what());
  }
  return v;
}

SignalVocabulary SignalVocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "vocabulary: cannot read " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "vocabulary: " + path + ": " + e.what());
  }
  return from_json(doc);
}

const SignalVocabulary& SignalVocabulary::builtin() {
  static const SignalVocabulary kVocab =
      from_json(json::parse(detail::kDefaultVocabJson));
  return kVocab;
}

SignalVocabulary SignalVocabulary::from_env_or_builtin() {
  if (const char* p = std::getenv("LOGROUTER_VOCAB"); p && *p) return load(p);
  return builtin();
}

void RouterConfig::validate() const {
  auto check = [](double v, const char* field) {
    if (!in_range(v)) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string("router.") + field + " must be in (0, 1], got " +
                      std::to_string(v));
    }
  };
  check(sql_threshold, "sql_threshold");
  check(keyword_threshold, "keyword_threshold");
  check(event_threshold, "event_threshold");
  check(complexity_threshold, "complexity_threshold");
  check(weight_per_match, "weight_per_match");
  check(per_match_increment, "per_match_increment");
  if (len_saturation_words <= 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "router.len_saturation_words must be positive, got " +
                    std::to_string(len_saturation_words));
  }
}

json to_json(const RouterConfig& c) {
  return json{{"sql_threshold", c.sql_threshold},
              {"keyword_threshold", c.keyword_threshold},
              {"event_threshold", c.event_threshold},
              {"complexity_threshold", c.complexity_threshold},
              {"weight_per_match", c.weight_per_match},
              {"len_saturation_words", c.len_saturation_words},
              {"per_match_increment", c.per_match_increment},
              {"p5_schema_exclusion", c.p5_schema_exclusion},
              {"templates_available", c.templates_available}};
}

RouterConfig router_config_from_json(const json& j) {
  RouterConfig c;
  try {
    c.sql_threshold = j.value("sql_threshold", c.sql_threshold);
    c.keyword_threshold = j.value("keyword_threshold", c.keyword_threshold);
    c.event_threshold = j.value("event_threshold", c.event_threshold);
    c.complexity_threshold = j.value("complexity_threshold", c.complexity_threshold);
    c.weight_per_match = j.value("weight_per_match", c.weight_per_match);
    c.len_saturation_words = j.value("len_saturation_words", c.len_saturation_words);
    c.per_match_increment = j.value("per_match_increment", c.per_match_increment);
    c.p5_schema_exclusion = j.value("p5_schema_exclusion", c.p5_schema_exclusion);
    c.templates_available = j.value("templates_available", c.templates_available);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("router: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const L1Decision& d) {
  json j{{"path", route_path_name(d.path)},
         {"sql_score", d.sql_score},
         {"keyword_score", d.keyword_score},
         {"event_score", d.event_score},
         {"matched_patterns", d.matched_patterns},
         {"p7_passed", d.p7_passed},
         {"extracted_search_term", nullptr},
         {"sql_signal", nullptr}};
  if (d.extracted_search_term) j["extracted_search_term"] = *d.extracted_search_term;
  if (d.sql_signal) j["sql_signal"] = *d.sql_signal;
  return j;
}

json to_json(const L2Decision& d) {
  return json{{"s_len", d.s_len},   {"s_agg", d.s_agg}, {"s_temp", d.s_temp},
              {"s_ent", d.s_ent},   {"total", d.total},
              {"tier", model_tier_name(d.tier)}};
}

TermRejected::TermRejected(L1Decision partial, const std::string& term)
    : Error(ErrorCode::kTermRejected, "search term rejected: " + term),
      partial_(std::move(partial)),
      term_(term) {}

bool validate_search_term(std::string_view term) {
  if (trim(term).empty()) return false;
  for (char c : term) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == ' ' || c == '.' || c == '-' ||
              c == '_' || c == ':' || c == '/';
    if (!ok) return false;
  }
  return term.find("--") == std::string_view::npos &&
         term.find("/*") == std::string_view::npos;
}

std::optional<std::string> extract_search_term(std::string_view question,
                                               const Signal& matched,
                                               const std::smatch& m) {
  std::vector<std::string> quoted = quoted_spans(question);
  if (!quoted.empty()) return quoted.front();

  if (matched.term_group > 0 &&
      static_cast<std::size_t>(matched.term_group) < m.size() &&
      m[matched.term_group].matched) {
    std::string t = clean_term(m[matched.term_group].str());
    if (!t.empty()) return t;
  }

  // Longest run of content words after the match.
  std::string_view rest = question;
  std::size_t end = static_cast<std::size_t>(m.position(0) + m.length(0));
  rest = end <= rest.size() ? rest.substr(end) : std::string_view();
  std::vector<std::string> best, cur;
  for (const std::string& w : split_whitespace(rest)) {
    std::string bare = clean_term(w);
    if (bare.empty() || stopwords().count(to_lower(bare))) {
      if (cur.size() > best.size()) best = cur;
      cur.clear();
    } else {
      cur.push_back(bare);
    }
  }
  if (cur.size() > best.size()) best = cur;
  if (best.empty()) return std::nullopt;
  return join(best, " ");
}

bool is_greeting(std::string_view question, const SignalVocabulary& vocab) {
  std::vector<std::string> toks = alnum_tokens(question);
  if (toks.empty() || toks.size() > 4) return false;
  return std::all_of(toks.begin(), toks.end(), [&](const std::string& t) {
    return std::find(vocab.greeting_lexicon.begin(), vocab.greeting_lexicon.end(), t) !=
           vocab.greeting_lexicon.end();
  });
}

std::size_t word_count(std::string_view question) {
  return split_whitespace(question).size();
}

L1Decision route_l1(std::string_view question, const SignalVocabulary& vocab,
                    const RouterConfig& cfg) {
  if (trim(question).empty()) {
    throw Error(ErrorCode::kInvalidInput, "question must be non-empty");
  }
  L1Decision d;
  std::string q(question);

  std::vector<std::string> toks = alnum_tokens(q);
  std::string first = toks.empty() ? std::string() : toks.front();
  bool starter = std::find(vocab.p7_starters.begin(), vocab.p7_starters.end(),
                           first) != vocab.p7_starters.end();

  if (is_greeting(q, vocab)) {
    d.path = RoutePath::kGeneral;
    d.p7_passed = starter;
    return d;
  }

  int sql_hits = 0;
  for (const Signal& s : vocab.sql_signals) {
    if (std::regex_search(q, s.re)) {
      ++sql_hits;
      d.matched_patterns.push_back(s.id);
      if (!d.sql_signal) d.sql_signal = s.id;
    }
  }

  int kw_hits = 0;
  const Signal* kw_first = nullptr;
  std::smatch kw_match;
  bool imperative = false;
  int ev_hits = 0;
  if (cfg.templates_available) {
    bool schema_hit = cfg.p5_schema_exclusion && !vocab.schema_exclusion_pattern.empty() &&
                      std::regex_search(q, vocab.schema_exclusion_re);
    for (const Signal& s : vocab.keyword_signals) {
      if (schema_hit && s.id == "P5") continue;
      std::smatch m;
      if (std::regex_search(q, m, s.re)) {
        ++kw_hits;
        d.matched_patterns.push_back(s.id);
        imperative = imperative || s.imperative;
        if (!kw_first) {
          kw_first = &s;
          kw_match = m;
        }
      }
    }
    for (const Signal& s : vocab.event_signals) {
      if (std::regex_search(q, s.re)) {
        ++ev_hits;
        d.matched_patterns.push_back(s.id);
      }
    }
  }

  d.sql_score = cfg.weight_per_match * sql_hits;
  d.keyword_score = cfg.weight_per_match * kw_hits;
  d.event_score = cfg.weight_per_match * ev_hits;
  d.p7_passed = starter || imperative;

  if (d.sql_score >= cfg.sql_threshold || d.event_score >= cfg.event_threshold) {
    d.path = RoutePath::kSql;
    return d;
  }
  if (d.keyword_score >= cfg.keyword_threshold && d.p7_passed && kw_first) {
    std::optional<std::string> term = extract_search_term(q, *kw_first, kw_match);
    if (!term) {
      d.path = RoutePath::kSemantic;
      return d;
    }
    d.extracted_search_term = term;
    if (!validate_search_term(*term)) {
      L1Decision partial = d;
      partial.path = RoutePath::kSemantic;
      partial.extracted_search_term.reset();
      throw TermRejected(partial, *term);
    }
    d.path = RoutePath::kKeyword;
    return d;
  }
  d.path = RoutePath::kSemantic;
  return d;
}

namespace {

double family_score(const std::string& q, const std::vector<Signal>& terms,
                    double increment) {
  std::size_t matches = 0;
  for (const Signal& s : terms) {
    matches += static_cast<std::size_t>(
        std::distance(std::sregex_iterator(q.begin(), q.end(), s.re), std::sregex_iterator()));
  }
  return std::min(0.25, increment * static_cast<double>(matches));
}

}  // namespace

L2Decision score_l2(std::string_view question, const SignalVocabulary& vocab,
                    const RouterConfig& cfg) {
  std::string q(question);
  L2Decision d;
  double wc = static_cast<double>(word_count(q));
  d.s_len = std::min(0.25, 0.25 * wc / cfg.len_saturation_words);
  d.s_agg = family_score(q, vocab.aggregation_terms, cfg.per_match_increment);
  d.s_temp = family_score(q, vocab.temporal_terms, cfg.per_match_increment);
  d.s_ent = family_score(q, vocab.entity_terms, cfg.per_match_increment);
  d.total = d.s_len + d.s_agg + d.s_temp + d.s_ent;
  d.tier = d.total >= cfg.complexity_threshold ? ModelTier::kLarge : ModelTier::kSmall;
  return d;
}

L2Decision score_l2(std::string_view question, const RouterConfig& cfg) {
  return score_l2(question, SignalVocabulary::builtin(), cfg);
}

}  // namespace logrouter
