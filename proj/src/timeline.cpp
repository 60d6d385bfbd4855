#include "cwatch/timeline.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "cwatch/error.hpp"

namespace cwatch {

namespace {

constexpr std::string_view kColumns = "group\ttopic_id\tinterval\tstart\tend\tcount";

long long ceil_div(long long a, long long b) { return a / b + (a % b != 0 ? 1 : 0); }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t from = 0;
  while (true) {
    std::size_t tab = line.find('\t', from);
    out.push_back(line.substr(from, tab - from));
    if (tab == std::string::npos) break;
    from = tab + 1;
  }
  return out;
}

long long to_ll(const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw Error("timeline-format", "expected an integer, got '" + s + "'");
  return v;
}

}  // namespace

std::string_view to_string(GroupBy g) { return g == GroupBy::forum ? "forum" : "site"; }

GroupBy parse_group_by(std::string_view text) {
  if (text == "forum") return GroupBy::forum;
  if (text == "site") return GroupBy::site;
  throw Error("invalid-parameter", "group_by must be forum or site, got '" + std::string(text) + "'");
}

long long TimelineSeries::total() const {
  long long sum = 0;
  for (const auto& [g, topics] : groups)
    for (const auto& [t, counts] : topics)
      for (int c : counts) sum += c;
  return sum;
}

int interval_index(TimestampMs t, TimestampMs t_min, long long span_ms, int n) {
  if (span_ms <= 0) return 0;
  long long u = (t - t_min).count();
  long long i = static_cast<long long>((static_cast<__int128>(u) * n) / span_ms);
  return static_cast<int>(std::clamp<long long>(i, 0, n - 1));
}

TimelineSeries compute_timeline(const std::vector<CanonicalThread>& threads,
                                const std::map<PostRef, std::set<int>>& assignments, int n, GroupBy group_by) {
  if (n < 1) throw Error("invalid-parameter", "intervals must be at least 1");

  struct Hit {
    std::string group;
    TimestampMs at;
    const std::set<int>* topics;
  };
  std::vector<Hit> hits;
  std::set<int> topic_ids;
  for (const auto& t : threads) {
    for (const auto& p : t.posts) {
      auto a = assignments.find({t.thread_id, p.post_id});
      if (a == assignments.end() || a->second.empty()) continue;
      hits.push_back({group_by == GroupBy::forum ? t.thread_id : t.site_id,
                      std::chrono::time_point_cast<std::chrono::milliseconds>(p.timestamp), &a->second});
      topic_ids.insert(a->second.begin(), a->second.end());
    }
  }
  if (hits.empty()) throw Error("empty-series", "no post in the selection carries a topic");

  auto [lo, hi] = std::minmax_element(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.at < b.at; });
  const TimestampMs t_min = lo->at, t_max = hi->at;
  const long long span = (t_max - t_min).count();

  TimelineSeries s;
  s.group_by = group_by;
  s.intervals_count = n;
  for (int i = 0; i < n; ++i) {
    TimestampMs start = t_min + std::chrono::milliseconds(ceil_div(static_cast<long long>(i) * span, n));
    TimestampMs end = i + 1 == n ? t_max : t_min + std::chrono::milliseconds(ceil_div((i + 1LL) * span, n));
    s.intervals.push_back({start, end});
  }
  for (const auto& h : hits) {
    auto& g = s.groups[h.group];
    if (g.empty())
      for (int id : topic_ids) g[id].assign(n, 0);
  }
  for (const auto& h : hits) {
    int i = interval_index(h.at, t_min, span, n);
    for (int topic : *h.topics) ++s.groups[h.group][topic][i];
  }
  return s;
}

std::string serialize_timeline(const TimelineSeries& s) {
  std::string out = "# group_by=" + std::string(to_string(s.group_by)) +
                    " intervals=" + std::to_string(s.intervals_count) + "\n";
  out += kColumns;
  out += '\n';
  for (const auto& [group, topics] : s.groups)
    for (const auto& [topic, counts] : topics)
      for (std::size_t i = 0; i < counts.size(); ++i) {
        out += group + '\t' + std::to_string(topic) + '\t' + std::to_string(i) + '\t' +
               format_iso8601(s.intervals[i].start) + '\t' + format_iso8601(s.intervals[i].end) + '\t' +
               std::to_string(counts[i]) + '\n';
      }
  return out;
}

TimelineSeries parse_timeline(std::string_view document) {
  std::istringstream in{std::string(document)};
  std::string line;
  TimelineSeries s;
  if (!std::getline(in, line) || line.rfind("# group_by=", 0) != 0)
    throw Error("timeline-format", "missing header line");
  {
    std::istringstream header(line.substr(2));
    std::string g, n;
    header >> g >> n;
    if (g.rfind("group_by=", 0) != 0 || n.rfind("intervals=", 0) != 0)
      throw Error("timeline-format", "malformed header line");
    try {
      s.group_by = parse_group_by(g.substr(9));
    } catch (const Error& e) {
      throw Error("timeline-format", e.what());
    }
    long long count = to_ll(n.substr(10));
    if (count < 1 || count > 1000000) throw Error("timeline-format", "interval count out of range");
    s.intervals_count = static_cast<int>(count);
  }
  if (!std::getline(in, line) || line != kColumns) throw Error("timeline-format", "missing column line");
  std::vector<std::optional<Interval>> intervals(s.intervals_count);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != 6) throw Error("timeline-format", "expected 6 columns: " + line);
    long long topic = to_ll(cells[1]);
    long long i = to_ll(cells[2]);
    long long count = to_ll(cells[5]);
    if (i < 0 || i >= s.intervals_count || count < 0) throw Error("timeline-format", "value out of range: " + line);
    auto start = parse_iso8601_ms(cells[3]);
    auto end = parse_iso8601_ms(cells[4]);
    if (!start || !end) throw Error("timeline-format", "bad timestamp: " + line);
    Interval iv{*start, *end};
    if (intervals[i] && *intervals[i] != iv) throw Error("timeline-format", "inconsistent interval bounds");
    intervals[i] = iv;
    auto& counts = s.groups[cells[0]][static_cast<int>(topic)];
    if (counts.empty()) counts.assign(s.intervals_count, 0);
    counts[i] = static_cast<int>(count);
  }
  for (auto& iv : intervals) {
    if (!iv) throw Error("timeline-format", "interval without rows");
    s.intervals.push_back(*iv);
  }
  return s;
}

}  // namespace cwatch
