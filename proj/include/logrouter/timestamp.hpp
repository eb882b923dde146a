#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace logrouter {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// "2024-01-01T00:00:00.000Z"
std::string format_iso8601(Timestamp ts);

// Accepts "YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|+HH:MM|-HH:MM]" or a bare date.
std::optional<Timestamp> parse_iso8601(std::string_view s);

// Parses the leading part of `line` with a strptime-like format. Supported
// conversions: %Y %m %d %e %H %M %S %b %f (fractional seconds, ms precision)
// and %%. A single space in the format matches one or more spaces.
// When the format has no %Y the year is `default_year`.
// On success `consumed` receives the number of bytes read.
std::optional<Timestamp> parse_with_format(std::string_view line,
                                           std::string_view format,
                                           int default_year,
                                           std::size_t* consumed = nullptr);

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0,
                         int minute = 0, int second = 0, int millis = 0);

}  // namespace logrouter
