#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cwatch/model.hpp"
#include "cwatch/time.hpp"

namespace cwatch {

enum class GroupBy { forum, site };

std::string_view to_string(GroupBy g);
// Throws cwatch::Error("invalid-parameter").
GroupBy parse_group_by(std::string_view text);

struct Interval {
  TimestampMs start;
  TimestampMs end;  // exclusive, except for the last interval

  bool operator==(const Interval&) const = default;
};

struct TimelineSeries {
  GroupBy group_by = GroupBy::forum;
  int intervals_count = 1;
  std::vector<Interval> intervals;
  // group key -> topic id -> counts, one per interval. Every group carries
  // every topic that appears anywhere in the series.
  std::map<std::string, std::map<int, std::vector<int>>> groups;

  long long total() const;
  bool operator==(const TimelineSeries&) const = default;
};

// Interval index of t for a span [t_min, t_min + span_ms] cut in n pieces.
// Boundaries sit at t_min + ceil(i * span / n) milliseconds, so the pieces
// of a 2n series refine the n series exactly.
int interval_index(TimestampMs t, TimestampMs t_min, long long span_ms, int n);

// Posts without a topic assignment are ignored, for the counts and for the
// time span alike. Groups are thread ids (forum) or site ids (site).
// Throws cwatch::Error("invalid-parameter") for n < 1 and
// Error("empty-series") when no post carries a topic.
TimelineSeries compute_timeline(const std::vector<CanonicalThread>& threads,
                                const std::map<PostRef, std::set<int>>& assignments, int n, GroupBy group_by);

// Tab-separated rows: group, topic_id, interval, start, end, count. Rows are
// ordered by group, topic, interval.
std::string serialize_timeline(const TimelineSeries& s);
// Throws cwatch::Error("timeline-format").
TimelineSeries parse_timeline(std::string_view document);

}  // namespace cwatch
