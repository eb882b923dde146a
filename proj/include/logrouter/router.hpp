#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logrouter/error.hpp"

namespace logrouter {

enum class RoutePath { kGeneral, kKeyword, kSql, kSemantic };
enum class ModelTier { kSmall, kLarge, kCoder };

std::string_view route_path_name(RoutePath p);
std::optional<RoutePath> parse_route_path(std::string_view s);
std::string_view model_tier_name(ModelTier t);

struct Signal {
  std::string id;
  std::string name;
  std::string pattern;
  // Capture group holding the search term (keyword signals), 0 for none.
  int term_group = 0;
  // Imperative search commands ("find lines ...") satisfy the question-starter
  // guard by their form.
  bool imperative = false;
  std::regex re;
};

// Regex families and lexicons that drive both routing levels.
struct SignalVocabulary {
  std::string version;
  std::vector<Signal> sql_signals;
  std::vector<Signal> keyword_signals;  // P0..P6
  std::vector<Signal> event_signals;
  std::vector<std::string> p7_starters;
  std::vector<std::string> greeting_lexicon;
  std::vector<Signal> aggregation_terms;
  std::vector<Signal> temporal_terms;
  std::vector<Signal> entity_terms;
  // Words that stop P5 from firing when the exclusion is enabled.
  std::string schema_exclusion_pattern;
  std::regex schema_exclusion_re;
  // Attribute nouns ("ip address", "port") the keyword path searches by
  // shape rather than by literal text.
  std::map<std::string, std::string> attribute_patterns;

  // Throws kInvalidConfig on a regex that fails to compile or a missing
  // family.
  static SignalVocabulary from_json(const nlohmann::json& doc);
  static SignalVocabulary load(const std::string& path);
  // The vocabulary shipped with the library (data/vocab.json).
  static const SignalVocabulary& builtin();
  // LOGROUTER_VOCAB when set, else builtin().
  static SignalVocabulary from_env_or_builtin();
};

struct RouterConfig {
  double sql_threshold = 0.3;
  double keyword_threshold = 0.3;
  double event_threshold = 0.5;
  double complexity_threshold = 0.5;
  double weight_per_match = 0.4;
  int len_saturation_words = 40;
  double per_match_increment = 0.125;
  bool p5_schema_exclusion = false;
  // Cleared when the template catalogue is hidden: the keyword and event
  // families depend on template-normalized tokens and go silent without it.
  bool templates_available = true;

  void validate() const;
};

nlohmann::json to_json(const RouterConfig& cfg);
RouterConfig router_config_from_json(const nlohmann::json& j);

struct L1Decision {
  RoutePath path = RoutePath::kSemantic;
  double sql_score = 0.0;
  double keyword_score = 0.0;
  double event_score = 0.0;
  std::vector<std::string> matched_patterns;
  bool p7_passed = false;
  std::optional<std::string> extracted_search_term;
  // Names the sql signal family member that fired first, if any.
  std::optional<std::string> sql_signal;
};

struct L2Decision {
  double s_len = 0.0;
  double s_agg = 0.0;
  double s_temp = 0.0;
  double s_ent = 0.0;
  double total = 0.0;
  ModelTier tier = ModelTier::kSmall;
};

nlohmann::json to_json(const L1Decision& d);
nlohmann::json to_json(const L2Decision& d);

// Carries the decision computed before the search term failed validation so
// the caller can downgrade to the semantic path.
class TermRejected : public Error {
 public:
  TermRejected(L1Decision partial, const std::string& term);
  const L1Decision& partial() const { return partial_; }
  const std::string& term() const { return term_; }

 private:
  L1Decision partial_;
  std::string term_;
};

// Alphanumerics, space, '.', '-', '_', ':', '/' only, and none of ";", "--",
// "/*".
bool validate_search_term(std::string_view term);

// Quoted literal if present, else the matched pattern's term group, else the
// longest run of content words after the match.
std::optional<std::string> extract_search_term(std::string_view question,
                                               const Signal& matched,
                                               const std::smatch& m);

bool is_greeting(std::string_view question, const SignalVocabulary& vocab);
std::size_t word_count(std::string_view question);

// Throws TermRejected (code kTermRejected) when the keyword path would run an
// unsafe term.
L1Decision route_l1(std::string_view question, const SignalVocabulary& vocab,
                    const RouterConfig& cfg);

L2Decision score_l2(std::string_view question, const SignalVocabulary& vocab,
                    const RouterConfig& cfg);
L2Decision score_l2(std::string_view question, const RouterConfig& cfg = {});

}  // namespace logrouter
