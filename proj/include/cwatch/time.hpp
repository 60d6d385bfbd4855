#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace cwatch {

// UTC, seconds precision.
using Timestamp = std::chrono::sys_seconds;
using TimestampMs = std::chrono::sys_time<std::chrono::milliseconds>;

// "2013-03-14T08:12:00Z"
std::string format_iso8601(Timestamp t);
// Milliseconds are printed only when non-zero: "2013-03-14T08:12:00.500Z".
std::string format_iso8601(TimestampMs t);

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+hh:mm|-hh:mm)".
std::optional<Timestamp> parse_iso8601(std::string_view text);
std::optional<TimestampMs> parse_iso8601_ms(std::string_view text);

// Parses site-local text with a strptime-style pattern. The whole input must
// be consumed (surrounding whitespace is ignored). When the pattern carries
// %z the parsed offset wins, otherwise utc_offset is applied.
std::optional<Timestamp> parse_with_format(std::string_view text,
                                           const std::string& pattern,
                                           std::chrono::seconds utc_offset);

// "+01:00", "-0530", "Z", "UTC" -> offset east of UTC.
std::optional<std::chrono::seconds> parse_utc_offset(std::string_view text);

}  // namespace cwatch
