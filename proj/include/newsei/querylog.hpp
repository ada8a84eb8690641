// Copyright 2026 The newsei Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/date.hpp"
#include "newsei/error.hpp"
#include "newsei/text.hpp"

namespace newsei {

struct LoggedQuery {
  std::string text;
  DateStamp date;
  std::int64_t distinct_users = 1;
  std::string entity;
  std::int64_t count = 1;
};

/// Keeps queries issued by at least `min_users` distinct users, in order.
inline std::vector<LoggedQuery> privacy_filter(const std::vector<LoggedQuery>& queries, std::int64_t min_users = 5) {
  std::vector<LoggedQuery> out;
  std::copy_if(queries.begin(), queries.end(), std::back_inserter(out),
               [&](const LoggedQuery& q) { return q.distinct_users >= min_users; });
  return out;
}

struct DailySeries {
  std::string entity;
  std::vector<std::pair<DateStamp, std::int64_t>> points;  // consecutive days
};

/// Sums counts per (entity, day) and fills the gaps between the first and
/// last day of each entity with zeros. Series come back sorted by entity.
inline std::vector<DailySeries> build_series(const std::vector<LoggedQuery>& queries) {
  std::map<std::string, std::map<DateStamp, std::int64_t>> per_entity;
  for (const auto& q : queries) per_entity[q.entity][q.date] += q.count;
  std::vector<DailySeries> out;
  for (const auto& [entity, days] : per_entity) {
    DailySeries s{entity, {}};
    const DateStamp first = days.begin()->first;
    const DateStamp last = days.rbegin()->first;
    for (DateStamp d = first; d <= last; d = d.plus_days(1)) {
      auto it = days.find(d);
      s.points.emplace_back(d, it == days.end() ? 0 : it->second);
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Trailing rolling sums. The first window-1 days sum over the days
/// available so far, so every day of the series gets a value.
inline std::vector<std::int64_t> rolling_sums(const DailySeries& series, std::size_t window) {
  std::vector<std::int64_t> sums(series.points.size());
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    acc += series.points[i].second;
    if (i >= window) acc -= series.points[i - window].second;
    sums[i] = acc;
  }
  return sums;
}

/// Days whose rolling sum exceeds the mean by more than one population
/// standard deviation. Compared exactly in integers:
///   s_i > S/n + sqrt(Q/n - (S/n)^2)  <=>  n*s_i - S > 0  and  (n*s_i - S)^2 > n*Q - S^2
inline std::vector<DateStamp> detect_spikes(const DailySeries& series, std::size_t window = 3) {
  if (window == 0) throw Error(ErrorKind::ConfigError, "spike window must be positive");
  if (series.points.size() < window) {
    throw Error(ErrorKind::SeriesTooShort, "series for '" + series.entity + "' has " +
                                               std::to_string(series.points.size()) + " days, window is " +
                                               std::to_string(window));
  }
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    if (series.points[i].second < 0) throw Error(ErrorKind::ConfigError, "negative query count");
    if (i > 0 && series.points[i - 1].first.days_until(series.points[i].first) != 1) {
      throw Error(ErrorKind::ConfigError, "series dates must be consecutive days");
    }
  }
  const auto sums = rolling_sums(series, window);
  __extension__ typedef __int128 Wide;
  const Wide n = static_cast<Wide>(sums.size());
  Wide total = 0;
  Wide squares = 0;
  for (auto s : sums) {
    total += s;
    squares += static_cast<Wide>(s) * s;
  }
  const Wide spread = n * squares - total * total;  // n^2 * variance, >= 0
  std::vector<DateStamp> out;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const Wide lead = n * sums[i] - total;
    if (lead > 0 && lead * lead > spread) out.push_back(series.points[i].first);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loaders. Rows carry {entity, date, count, distinct_users} plus an
// optional query text.

namespace detail {

inline std::int64_t parse_count(std::string_view field, std::string_view what) {
  const auto t = text::trim(field);
  if (t.empty() || t.size() > 18 || !std::all_of(t.begin(), t.end(), text::is_digit)) {
    throw Error(ErrorKind::MissingInput, "bad " + std::string(what) + " value '" + std::string(t) + "'");
  }
  return std::stoll(std::string(t));
}

inline LoggedQuery checked(LoggedQuery q) {
  if (q.distinct_users < 1) throw Error(ErrorKind::MissingInput, "distinct_users must be at least 1");
  if (q.entity.empty()) throw Error(ErrorKind::MissingInput, "query log row without an entity");
  return q;
}

}  // namespace detail

inline std::vector<LoggedQuery> querylog_from_jsonl(std::string_view content) {
  std::vector<LoggedQuery> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LoggedQuery q;
      q.entity = j.at("entity").get<std::string>();
      q.date = DateStamp::parse(j.at("date").get<std::string>());
      q.count = j.value("count", std::int64_t{1});
      q.distinct_users = j.at("distinct_users").get<std::int64_t>();
      q.text = j.value("text", std::string{});
      if (q.count < 0) throw Error(ErrorKind::MissingInput, "negative count");
      out.push_back(detail::checked(std::move(q)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MissingInput, "query log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Header row required; columns located by name. Fields may not contain
/// commas.
inline std::vector<LoggedQuery> querylog_from_csv(std::string_view content) {
  const auto lines = text::split_lines(content);
  std::vector<LoggedQuery> out;
  if (lines.empty()) return out;
  auto split = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.emplace_back(text::trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  const auto header = split(lines[0]);
  auto column = [&](std::string_view name, bool required) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw Error(ErrorKind::MissingInput, "query log CSV lacks column '" + std::string(name) + "'");
      return -1;
    }
    return it - header.begin();
  };
  const auto c_entity = column("entity", true);
  const auto c_date = column("date", true);
  const auto c_count = column("count", true);
  const auto c_users = column("distinct_users", true);
  const auto c_text = column("text", false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i]);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::MissingInput, "query log CSV row " + std::to_string(i + 1) + " has " +
                                               std::to_string(cells.size()) + " cells");
    }
    LoggedQuery q;
    q.entity = cells[c_entity];
    q.date = DateStamp::parse(cells[c_date]);
    q.count = detail::parse_count(cells[c_count], "count");
    q.distinct_users = detail::parse_count(cells[c_users], "distinct_users");
    if (c_text >= 0) q.text = cells[c_text];
    out.push_back(detail::checked(std::move(q)));
  }
  return out;
}

/// Picks the loader from the extension (.csv, otherwise JSON-lines).
inline std::vector<LoggedQuery> load_querylog(const std::string& path) {
  const std::string content = text::read_file(path);
  if (path.size() >= 4 && text::to_lower(path.substr(path.size() - 4)) == ".csv") return querylog_from_csv(content);
  return querylog_from_jsonl(content);
}

/// {"<entity>": ["YYYYMMDD", ...], ...}
inline nlohmann::json spikes_to_json(const std::vector<std::pair<std::string, std::vector<DateStamp>>>& spikes) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [entity, dates] : spikes) {
    nlohmann::json list = nlohmann::json::array();
    for (auto d : dates) list.push_back(d.str());
    out[entity] = std::move(list);
  }
  return out;
}

}  // namespace newsei
