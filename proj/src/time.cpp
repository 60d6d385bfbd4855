#include "cwatch/time.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <ctime>

namespace cwatch {

namespace {

using namespace std::chrono;

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_date_time(sys_seconds secs) {
  auto days = floor<std::chrono::days>(secs);
  year_month_day ymd{days};
  hh_mm_ss hms{secs - days};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

}  // namespace

std::string format_iso8601(Timestamp t) { return format_date_time(t) + "Z"; }

std::string format_iso8601(TimestampMs t) {
  auto secs = floor<seconds>(t);
  auto ms = (t - secs).count();
  std::string out = format_date_time(secs);
  if (ms != 0) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ".%03lld", static_cast<long long>(ms));
    out += buf;
  }
  return out + "Z";
}

std::optional<std::chrono::seconds> parse_utc_offset(std::string_view text) {
  text = trim(text);
  if (text == "Z" || text == "UTC" || text == "GMT" || text.empty()) return seconds{0};
  if (text.size() < 3 || (text[0] != '+' && text[0] != '-')) return std::nullopt;
  int sign = text[0] == '-' ? -1 : 1;
  int hh = 0, mm = 0;
  if (!read_int(text, 1, 2, hh)) return std::nullopt;
  std::size_t pos = 3;
  if (pos < text.size() && text[pos] == ':') ++pos;
  if (pos < text.size()) {
    if (!read_int(text, pos, 2, mm) || pos + 2 != text.size()) return std::nullopt;
  }
  if (hh > 23 || mm > 59) return std::nullopt;
  return seconds{sign * (hh * 3600 + mm * 60)};
}

std::optional<TimestampMs> parse_iso8601_ms(std::string_view text) {
  int y, mo, d, h, mi, s;
  if (text.size() < 20) return std::nullopt;
  if (!read_int(text, 0, 4, y) || text[4] != '-' || !read_int(text, 5, 2, mo) || text[7] != '-' ||
      !read_int(text, 8, 2, d) || text[10] != 'T' || !read_int(text, 11, 2, h) ||
      text[13] != ':' || !read_int(text, 14, 2, mi) || text[16] != ':' ||
      !read_int(text, 17, 2, s))
    return std::nullopt;
  std::size_t pos = 19;
  int ms = 0;
  if (text[pos] == '.') {
    std::size_t start = ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    std::size_t digits = pos - start;
    if (digits == 0 || digits > 3) return std::nullopt;
    read_int(text, start, digits, ms);
    for (std::size_t i = digits; i < 3; ++i) ms *= 10;
  }
  auto offset = parse_utc_offset(text.substr(pos));
  if (!offset || pos == text.size()) return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  auto t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - *offset;
  return TimestampMs{duration_cast<milliseconds>(t.time_since_epoch()) + milliseconds{ms}};
}

std::optional<Timestamp> parse_iso8601(std::string_view text) {
  auto t = parse_iso8601_ms(text);
  if (!t) return std::nullopt;
  auto secs = floor<seconds>(*t);
  if (secs != *t) return std::nullopt;
  return secs;
}

std::optional<Timestamp> parse_with_format(std::string_view text, const std::string& pattern,
                                           std::chrono::seconds utc_offset) {
  std::string input{trim(text)};
  std::tm tm{};
  tm.tm_mday = 1;
  const char* end = ::strptime(input.c_str(), pattern.c_str(), &tm);
  if (end == nullptr) return std::nullopt;
  while (*end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (*end != '\0') return std::nullopt;
  seconds offset = utc_offset;
  if (pattern.find("%z") != std::string::npos) offset = seconds{tm.tm_gmtoff};
  year_month_day ymd{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                     day{static_cast<unsigned>(tm.tm_mday)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd} + hours{tm.tm_hour} + minutes{tm.tm_min} + seconds{tm.tm_sec} - offset;
}

}  // namespace cwatch
