#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace logrouter {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);

// Splits on runs of ASCII whitespace; empty pieces are dropped.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Dotted quad with each octet 1-3 digits. Range is not checked.
bool is_ipv4_shaped(std::string_view s);

// Escapes ECMAScript regex metacharacters so `s` matches literally.
std::string regex_escape(std::string_view s);

// Lowercase alphanumeric runs; everything else separates. Used by ROUGE and
// the greeting detector.
std::vector<std::string> alnum_tokens(std::string_view s);

// Spans inside matching single or double quotes, in order. A quote opens
// only after a non-alphanumeric (so apostrophes in "don't" are not quotes);
// an unbalanced trailing quote is ignored and empty spans are dropped.
std::vector<std::string> quoted_spans(std::string_view s);

}  // namespace logrouter
