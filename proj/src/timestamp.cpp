#include "logrouter/timestamp.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace logrouter {

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yy + (m <= 2));
}

bool valid_date(int /*year*/, unsigned month, unsigned day) {
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

bool valid_time(int h, int mi, int s) {
  return h >= 0 && h <= 23 && mi >= 0 && mi <= 59 && s >= 0 && s <= 60;
}

// Reads exactly `width` digits (or 1..width when `flexible`).
bool read_int(std::string_view s, std::size_t& pos, int width, int& out,
              bool flexible = false) {
  int value = 0;
  int n = 0;
  while (n < width && pos < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[pos]))) {
    value = value * 10 + (s[pos] - '0');
    ++pos;
    ++n;
  }
  if (n == 0 || (!flexible && n != width)) return false;
  out = value;
  return true;
}

constexpr std::array<std::string_view, 12> kMonths = {
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};

}  // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour,
                         int minute, int second, int millis) {
  const std::int64_t days = days_from_civil(year, month, day);
  const std::int64_t ms =
      ((days * 24 + hour) * 60 + minute) * 60'000LL + second * 1000LL + millis;
  return Timestamp(std::chrono::milliseconds(ms));
}

std::string format_iso8601(Timestamp ts) {
  const std::int64_t ms = ts.time_since_epoch().count();
  std::int64_t days = ms / 86'400'000;
  std::int64_t rem = ms % 86'400'000;
  if (rem < 0) {
    rem += 86'400'000;
    --days;
  }
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  const int h = static_cast<int>(rem / 3'600'000);
  const int mi = static_cast<int>(rem / 60'000 % 60);
  const int s = static_cast<int>(rem / 1000 % 60);
  const int milli = static_cast<int>(rem % 1000);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", y, m, d,
                h, mi, s, milli);
  return buf;
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  std::size_t pos = 0;
  int y, mo, d;
  if (!read_int(s, pos, 4, y)) return std::nullopt;
  if (pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_int(s, pos, 2, mo)) return std::nullopt;
  if (pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_int(s, pos, 2, d)) return std::nullopt;
  if (!valid_date(y, mo, d)) return std::nullopt;
  if (pos == s.size()) return make_timestamp(y, mo, d);
  if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
  ++pos;
  int h, mi, sec = 0, ms = 0;
  if (!read_int(s, pos, 2, h)) return std::nullopt;
  if (pos >= s.size() || s[pos++] != ':') return std::nullopt;
  if (!read_int(s, pos, 2, mi)) return std::nullopt;
  if (pos < s.size() && s[pos] == ':') {
    ++pos;
    if (!read_int(s, pos, 2, sec)) return std::nullopt;
  }
  if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
    ++pos;
    int digits = 0;
    int frac = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) frac = frac * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int i = digits; i < 3; ++i) frac *= 10;
    ms = frac;
  }
  if (!valid_time(h, mi, sec)) return std::nullopt;
  Timestamp ts = make_timestamp(y, mo, d, h, mi, sec, ms);
  if (pos == s.size()) return ts;
  if (s[pos] == 'Z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    ++pos;
    int oh, om = 0;
    if (!read_int(s, pos, 2, oh)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') ++pos;
    if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])) &&
        !read_int(s, pos, 2, om)) {
      return std::nullopt;
    }
    ts -= std::chrono::minutes(sign * (oh * 60 + om));
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  return ts;
}

std::optional<Timestamp> parse_with_format(std::string_view line,
                                           std::string_view format,
                                           int default_year,
                                           std::size_t* consumed) {
  int y = default_year, mo = 1, d = 1, h = 0, mi = 0, sec = 0, ms = 0;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < format.size(); ++f) {
    const char fc = format[f];
    if (fc == ' ') {
      if (pos >= line.size() || line[pos] != ' ') return std::nullopt;
      while (pos < line.size() && line[pos] == ' ') ++pos;
      continue;
    }
    if (fc != '%') {
      if (pos >= line.size() || line[pos] != fc) return std::nullopt;
      ++pos;
      continue;
    }
    if (++f >= format.size()) return std::nullopt;
    bool ok = true;
    switch (format[f]) {
      case 'Y': ok = read_int(line, pos, 4, y); break;
      case 'm': ok = read_int(line, pos, 2, mo, true); break;
      case 'd':
      case 'e': ok = read_int(line, pos, 2, d, true); break;
      case 'H': ok = read_int(line, pos, 2, h, true); break;
      case 'M': ok = read_int(line, pos, 2, mi); break;
      case 'S': ok = read_int(line, pos, 2, sec); break;
      case 'f': {
        int digits = 0, frac = 0;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
          if (digits < 3) frac = frac * 10 + (line[pos] - '0');
          ++digits;
          ++pos;
        }
        ok = digits > 0;
        for (int i = digits; i < 3; ++i) frac *= 10;
        ms = frac;
        break;
      }
      case 'b': {
        ok = false;
        if (pos + 3 <= line.size()) {
          std::string mon;
          for (std::size_t i = 0; i < 3; ++i)
            mon += static_cast<char>(std::tolower(static_cast<unsigned char>(line[pos + i])));
          for (std::size_t i = 0; i < kMonths.size(); ++i) {
            if (kMonths[i] == mon) {
              mo = static_cast<int>(i) + 1;
              ok = true;
              pos += 3;
              break;
            }
          }
        }
        break;
      }
      case '%':
        ok = pos < line.size() && line[pos] == '%';
        if (ok) ++pos;
        break;
      default: return std::nullopt;
    }
    if (!ok) return std::nullopt;
  }
  if (!valid_date(y, mo, d) || !valid_time(h, mi, sec)) return std::nullopt;
  if (consumed) *consumed = pos;
  return make_timestamp(y, mo, d, h, mi, sec, ms);
}

}  // namespace logrouter
