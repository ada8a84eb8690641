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
#include <array>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/error.hpp"
#include "newsei/parallel.hpp"
#include "newsei/providers.hpp"
#include "newsei/text.hpp"

namespace newsei {

enum class Attribute { Helpfulness, Relevance, Faithfulness };

inline constexpr std::array<Attribute, 3> kAllAttributes = {Attribute::Helpfulness, Attribute::Relevance,
                                                            Attribute::Faithfulness};

inline std::string_view to_string(Attribute a) noexcept {
  switch (a) {
    case Attribute::Helpfulness: return "Helpfulness";
    case Attribute::Relevance: return "Relevance";
    case Attribute::Faithfulness: return "Faithfulness";
  }
  return "Helpfulness";
}

inline Attribute attribute_from_string(std::string_view s) {
  const std::string l = text::to_lower(s);
  if (l == "h" || l == "helpfulness") return Attribute::Helpfulness;
  if (l == "r" || l == "relevance") return Attribute::Relevance;
  if (l == "f" || l == "faithfulness") return Attribute::Faithfulness;
  throw Error(ErrorKind::ConfigError, "unknown attribute '" + std::string(s) + "'");
}

/// "all" or one of h|r|f (full names accepted).
inline std::vector<Attribute> attributes_from_string(std::string_view s) {
  if (text::to_lower(s) == "all") return {kAllAttributes.begin(), kAllAttributes.end()};
  return {attribute_from_string(s)};
}

enum class JudgeMode { ZeroShot, FewShot };

inline JudgeMode judge_mode_from_string(std::string_view s) {
  if (s == "zero") return JudgeMode::ZeroShot;
  if (s == "few") return JudgeMode::FewShot;
  throw Error(ErrorKind::ConfigError, "judge mode must be zero or few, got '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Judge prompts

namespace detail {

struct JudgeTemplate {
  std::string_view quality;  // word used in the task description
  std::string_view criterion;
};

inline constexpr std::string_view kTaskDescriptionHead =
    "You are presented with a user query and an AI assistant's response. The query is focused on a specific "
    "entity, pertains to the news domain, and is date-stamped. Your task is to evaluate the AI assistant's "
    "response for its ";
inline constexpr std::string_view kTaskDescriptionTail =
    ", using a 3-point Likert scale. The criteria for rating are detailed below.";

// The output-format sentence ends in "helpfulness rating" for every
// attribute; kept as published.
inline constexpr std::string_view kOutputFormat =
    "The output should be the following JSON format: {\"rating\": <numerical_rating>, \"reason\": "
    "<short_reasoning>}, mentioning the numerical rating, as well as a short and concise reasoning for the "
    "helpfulness rating.";

inline JudgeTemplate judge_template(Attribute a) {
  switch (a) {
    case Attribute::Helpfulness:
      return {"usefulness",
              "Rating 2: The response is very helpful and provides the information expected for the user query. "
              "It includes mentions of additional named entities (such as people, locations, events, etc.) beyond "
              "the primary entity in the query and aligns completely with user's intent.\n"
              "Rating 1: The response is somewhat helpful but fails to fully provide the information expected for "
              "the user's query. It can nevertheless serve to continue the conversation with the user or provides "
              "pointers to where the information can be found.\n"
              "Rating 0: The response is not helpful and provides no information for the query."};
    case Attribute::Relevance:
      return {"relevance",
              "Rating 2: The response is completely relevant with accurate details and provides the information "
              "for the query date.\n"
              "Rating 1: The response contains a mix of relevant and irrelevant details. The response contains "
              "some relevant information upto the specified date, and is more or less aligned with the user's "
              "intent.\n"
              "Rating 0: The response is incorrect and provides no information for the query date."};
    case Attribute::Faithfulness:
      return {"reliability",
              "Rating 2: The response is perfectly reliable and grounded based on the supporting passages given "
              "below. All the information from the supporting passages is used in the response to answer the "
              "user query.\n"
              "Rating 1: The response partially uses the supporting passages given below but has additional "
              "information which may be incorrect or unreliable.\n"
              "Rating 0: The response is completely unreliable and does not depend on the supporting passages."};
  }
  return {};
}

}  // namespace detail

inline constexpr std::string_view kUserQueryLabel = "User query: ";
inline constexpr std::string_view kJudgePassagesLabel = "Supporting passages:";
inline constexpr std::string_view kResponseLabel = "AI assistant\xE2\x80\x99s response: ";

inline std::string render_judge_passages(const std::vector<std::string>& passages) {
  if (passages.empty()) return " (none)";
  std::string out;
  for (std::size_t i = 0; i < passages.size(); ++i) out += "\n[" + std::to_string(i + 1) + "] " + passages[i];
  return out;
}

/// One attribute per prompt. Few-shot mode inserts `examples` under
/// "## Examples"; zero-shot leaves that section out entirely. Faithfulness
/// needs the supporting passages.
inline std::string build_judge_prompt(Attribute attribute, JudgeMode mode, std::string_view question,
                                      std::string_view response,
                                      const std::optional<std::vector<std::string>>& passages = std::nullopt,
                                      std::string_view examples = {}) {
  if (attribute == Attribute::Faithfulness && !passages) {
    throw Error(ErrorKind::MissingPassages, "faithfulness judging requires the supporting passages");
  }
  const auto tmpl = detail::judge_template(attribute);
  std::string p;
  p += "## Task Description\n";
  p += detail::kTaskDescriptionHead;
  p += tmpl.quality;
  p += detail::kTaskDescriptionTail;
  p += "\n\n## ";
  p += to_string(attribute);
  p += " Criterion\n";
  p += tmpl.criterion;
  p += "\n\n## Output format\n";
  p += detail::kOutputFormat;
  p += "\n\n";
  if (mode == JudgeMode::FewShot) {
    p += "## Examples\n";
    p += text::trim(examples);
    p += "\n\n";
  }
  p += "## Input to be rated\n";
  p += kUserQueryLabel;
  p += question;
  p += "\n";
  if (attribute == Attribute::Faithfulness) {
    p += kJudgePassagesLabel;
    p += render_judge_passages(*passages);
    p += "\n";
  }
  p += kResponseLabel;
  p += response;
  p += "\n";
  return p;
}

/// Reads <dir>/{helpfulness,relevance,faithfulness}.txt.
inline std::map<Attribute, std::string> load_judge_examples(const std::string& dir) {
  std::map<Attribute, std::string> out;
  for (Attribute a : kAllAttributes) {
    const auto path = std::filesystem::path(dir) / (text::to_lower(to_string(a)) + ".txt");
    out[a] = text::read_file(path.string());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ratings

struct Rating {
  Attribute attribute = Attribute::Helpfulness;
  /// Equals raw when in range; otherwise raw clamped into [0, 2].
  int rating = 0;
  std::string reason;
  bool flagged = false;
  int raw = 0;
};

namespace detail {

/// End of the balanced {...} starting at `open`, honouring JSON strings.
inline std::optional<std::size_t> balanced_object_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

inline std::optional<int> integral_rating(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d && std::abs(d) < 1e9) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s(text::trim(v.get<std::string>()));
    if (s.empty() || s.size() > 9) return std::nullopt;
    std::size_t i = s[0] == '-' ? 1 : 0;
    if (i == s.size()) return std::nullopt;
    for (std::size_t j = i; j < s.size(); ++j) {
      if (!text::is_digit(s[j])) return std::nullopt;
    }
    return std::stoi(s);
  }
  return std::nullopt;
}

}  // namespace detail

/// Takes the first embedded JSON object that carries a "rating". Ratings
/// outside {0, 1, 2} are kept in `raw` and flagged.
inline Rating parse_rating(std::string_view judge_output, Attribute attribute) {
  for (std::size_t open = judge_output.find('{'); open != std::string_view::npos;
       open = judge_output.find('{', open + 1)) {
    const auto close = detail::balanced_object_end(judge_output, open);
    if (!close) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(judge_output.substr(open, *close - open + 1));
    } catch (const nlohmann::json::parse_error&) {
      continue;
    }
    if (!obj.is_object() || !obj.contains("rating")) continue;
    const auto raw = detail::integral_rating(obj.at("rating"));
    if (!raw) throw Error(ErrorKind::ParseFailure, "rating is not an integer");
    if (!obj.contains("reason") || !obj.at("reason").is_string()) {
      throw Error(ErrorKind::ParseFailure, "judge output lacks a string \"reason\"");
    }
    Rating r;
    r.attribute = attribute;
    r.raw = *raw;
    r.flagged = *raw < 0 || *raw > 2;
    r.rating = std::clamp(*raw, 0, 2);
    r.reason = obj.at("reason").get<std::string>();
    return r;
  }
  throw Error(ErrorKind::ParseFailure, "no JSON object with a rating in judge output");
}

// ---------------------------------------------------------------------------
// Judging QA responses

/// What the judge needs from one QA response record.
struct AnswerRecord {
  std::string method;
  std::string strategy;
  std::string question;  // the date-stamped query
  std::string answer;
  std::vector<std::string> passages;
};

inline AnswerRecord answer_record_from_json(const nlohmann::json& j) {
  try {
    AnswerRecord a;
    a.method = j.value("method", std::string("default"));
    a.strategy = j.value("strategy", std::string("temporal"));
    a.question = j.contains("reformulated") ? j.at("reformulated").get<std::string>() : j.at("query").get<std::string>();
    a.answer = j.at("answer").get<std::string>();
    if (j.contains("support")) {
      for (const auto& s : j.at("support")) {
        a.passages.push_back("(" + s.at("date").get<std::string>() + ") " + s.at("text").get<std::string>());
      }
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MissingInput, std::string("malformed answer record: ") + e.what());
  }
}

struct JudgeRecord {
  std::size_t item = 0;
  std::string method;
  std::string strategy;
  Attribute attribute = Attribute::Helpfulness;
  std::optional<Rating> rating;  // empty on parse or provider failure
  std::string error;
  std::size_t response_chars = 0;
  std::string judge_output;
};

struct JudgeOptions {
  JudgeMode mode = JudgeMode::ZeroShot;
  std::vector<Attribute> attributes{kAllAttributes.begin(), kAllAttributes.end()};
  std::map<Attribute, std::string> examples;
  GenerationParams params;
  std::size_t parallelism = 1;
};

/// Issues exactly one judge call per (item, attribute).
inline std::vector<JudgeRecord> judge_responses(const std::vector<AnswerRecord>& items, LlmClient& llm,
                                                const JudgeOptions& opts) {
  if (opts.mode == JudgeMode::FewShot) {
    for (Attribute a : opts.attributes) {
      if (!opts.examples.count(a)) {
        throw Error(ErrorKind::ConfigError, "few-shot mode needs examples for " + std::string(to_string(a)));
      }
    }
  }
  const std::size_t per_item = opts.attributes.size();
  return parallel_map(items.size() * per_item, opts.parallelism, [&](std::size_t task) {
    const AnswerRecord& item = items[task / per_item];
    const Attribute attribute = opts.attributes[task % per_item];
    JudgeRecord rec;
    rec.item = task / per_item;
    rec.method = item.method;
    rec.strategy = item.strategy;
    rec.attribute = attribute;
    rec.response_chars = text::utf8_length(item.answer);
    const auto passages = attribute == Attribute::Faithfulness
                              ? std::optional<std::vector<std::string>>(item.passages)
                              : std::nullopt;
    const auto ex = opts.examples.find(attribute);
    const std::string prompt = build_judge_prompt(attribute, opts.mode, item.question, item.answer, passages,
                                                  ex == opts.examples.end() ? std::string_view{} : ex->second);
    try {
      rec.judge_output = llm.complete(prompt, opts.params);
      rec.rating = parse_rating(rec.judge_output, attribute);
    } catch (const Error& e) {
      rec.error = e.what();
    }
    return rec;
  });
}

inline nlohmann::json to_json(const JudgeRecord& r) {
  nlohmann::json j = {{"item", r.item},
                      {"method", r.method},
                      {"strategy", r.strategy},
                      {"attribute", std::string(to_string(r.attribute))},
                      {"response_chars", r.response_chars}};
  if (r.rating) {
    j["rating"] = r.rating->rating;
    j["raw"] = r.rating->raw;
    j["flagged"] = r.rating->flagged;
    j["reason"] = r.rating->reason;
  } else {
    j["rating"] = nullptr;
    j["error"] = r.error;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Aggregation

enum class FlaggedPolicy { Exclude, Clamp };

struct CellStats {
  std::size_t total = 0;
  std::size_t flagged = 0;
  std::size_t parse_failed = 0;
  std::size_t counted = 0;
  long long sum = 0;

  bool present() const noexcept { return counted > 0; }
  double mean() const noexcept { return counted ? static_cast<double>(sum) / static_cast<double>(counted) : 0.0; }
};

struct ReportRow {
  std::string method;
  std::string strategy;
  std::map<Attribute, CellStats> cells;

  /// Mean of the attribute means that are present.
  std::optional<double> average() const {
    double acc = 0.0;
    int n = 0;
    for (Attribute a : kAllAttributes) {
      if (auto it = cells.find(a); it != cells.end() && it->second.present()) {
        acc += it->second.mean();
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return acc / n;
  }
};

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

struct EvalReport {
  std::vector<ReportRow> rows;  // sorted by (method, strategy)
  std::size_t total = 0;
  std::size_t flagged = 0;
  std::size_t parse_failed = 0;

  nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json cells = nlohmann::json::object();
      for (const auto& [a, c] : row.cells) {
        cells[std::string(to_string(a))] = {{"mean", c.present() ? nlohmann::json(round2(c.mean())) : nlohmann::json()},
                                            {"count", c.counted},
                                            {"flagged", c.flagged},
                                            {"parse_failed", c.parse_failed},
                                            {"total", c.total}};
      }
      const auto avg = row.average();
      rows_json.push_back({{"method", row.method},
                           {"strategy", row.strategy},
                           {"attributes", std::move(cells)},
                           {"average", avg ? nlohmann::json(round2(*avg)) : nlohmann::json()}});
    }
    return {{"rows", std::move(rows_json)},
            {"counts", {{"total", total}, {"flagged", flagged}, {"parse_failed", parse_failed}}}};
  }

  /// Aligned table with means to two decimals; "-" marks an empty cell.
  std::string to_text() const {
    std::vector<std::array<std::string, 6>> lines;
    lines.push_back({"Method", "Strategy", "Helpful", "Relevant", "Faithful", "Avg."});
    auto fmt = [](std::optional<double> v) {
      if (!v) return std::string("-");
      std::ostringstream ss;
      ss << std::fixed << std::setprecision(2) << round2(*v);
      return ss.str();
    };
    for (const auto& row : rows) {
      std::array<std::string, 6> line{row.method, row.strategy, "", "", "", fmt(row.average())};
      for (std::size_t i = 0; i < 3; ++i) {
        auto it = row.cells.find(kAllAttributes[i]);
        line[2 + i] = fmt(it != row.cells.end() && it->second.present() ? std::optional(it->second.mean()) : std::nullopt);
      }
      lines.push_back(std::move(line));
    }
    std::array<std::size_t, 6> width{};
    for (const auto& l : lines) {
      for (std::size_t i = 0; i < 6; ++i) width[i] = std::max(width[i], l[i].size());
    }
    std::string out;
    for (const auto& l : lines) {
      std::string row;
      for (std::size_t i = 0; i < 6; ++i) {
        row += l[i];
        if (i + 1 < 6) row += std::string(width[i] - l[i].size() + 2, ' ');
      }
      out += std::string(text::trim(row)) + "\n";
    }
    out += "\ntotal=" + std::to_string(total) + " flagged=" + std::to_string(flagged) +
           " parse_failed=" + std::to_string(parse_failed) + "\n";
    return out;
  }
};

/// Means per (method, strategy, attribute) over usable ratings. Flagged
/// ratings count only under FlaggedPolicy::Clamp; parse failures never do.
/// Sums are integers, so the result does not depend on input order.
inline EvalReport aggregate(const std::vector<JudgeRecord>& records, FlaggedPolicy policy = FlaggedPolicy::Exclude) {
  std::map<std::pair<std::string, std::string>, ReportRow> rows;
  EvalReport report;
  for (const auto& r : records) {
    auto& row = rows[{r.method, r.strategy}];
    row.method = r.method;
    row.strategy = r.strategy;
    auto& cell = row.cells[r.attribute];
    ++cell.total;
    ++report.total;
    if (!r.rating) {
      ++cell.parse_failed;
      ++report.parse_failed;
      continue;
    }
    if (r.rating->flagged) {
      ++cell.flagged;
      ++report.flagged;
      if (policy == FlaggedPolicy::Exclude) continue;
    }
    ++cell.counted;
    cell.sum += r.rating->rating;
  }
  for (auto& [_, row] : rows) report.rows.push_back(std::move(row));
  return report;
}

// ---------------------------------------------------------------------------
// Response length statistics

struct LengthCell {
  std::string method;
  Attribute attribute = Attribute::Helpfulness;
  int rating = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

inline double median_of(std::vector<std::size_t> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return static_cast<double>(values[n / 2]);
  return (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2])) / 2.0;
}

/// Mean and median response length (code points) per (method, attribute,
/// rating), over unflagged ratings.
inline std::vector<LengthCell> length_stats(const std::vector<JudgeRecord>& records) {
  std::map<std::tuple<std::string, Attribute, int>, std::vector<std::size_t>> groups;
  for (const auto& r : records) {
    if (!r.rating || r.rating->flagged) continue;
    groups[{r.method, r.attribute, r.rating->rating}].push_back(r.response_chars);
  }
  std::vector<LengthCell> out;
  for (auto& [key, lengths] : groups) {
    LengthCell cell;
    std::tie(cell.method, cell.attribute, cell.rating) = key;
    cell.count = lengths.size();
    unsigned long long sum = 0;
    for (auto l : lengths) sum += l;
    cell.mean = static_cast<double>(sum) / static_cast<double>(lengths.size());
    cell.median = median_of(std::move(lengths));
    out.push_back(std::move(cell));
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<LengthCell>& cells) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : cells) {
    out.push_back({{"method", c.method},
                   {"attribute", std::string(to_string(c.attribute))},
                   {"rating", c.rating},
                   {"count", c.count},
                   {"mean", std::round(c.mean * 10.0) / 10.0},
                   {"median", c.median}});
  }
  return out;
}

/// Rows (method, rating), columns mean/median per attribute.
inline std::string length_table_text(const std::vector<LengthCell>& cells) {
  std::map<std::pair<std::string, int>, std::map<Attribute, const LengthCell*>> grid;
  for (const auto& c : cells) grid[{c.method, c.rating}][c.attribute] = &c;
  std::ostringstream ss;
  ss << std::left << std::setw(20) << "Method" << std::setw(8) << "Score";
  for (Attribute a : kAllAttributes) {
    ss << std::setw(10) << (std::string(to_string(a)).substr(0, 8) + ":mean") << std::setw(10) << "median";
  }
  ss << "\n";
  for (const auto& [key, row] : grid) {
    ss << std::left << std::setw(20) << key.first << std::setw(8) << key.second;
    for (Attribute a : kAllAttributes) {
      auto it = row.find(a);
      if (it == row.end()) {
        ss << std::setw(10) << "-" << std::setw(10) << "-";
      } else {
        std::ostringstream m, md;
        m << std::fixed << std::setprecision(1) << it->second->mean;
        md << std::fixed << std::setprecision(1) << it->second->median;
        ss << std::setw(10) << m.str() << std::setw(10) << md.str();
      }
    }
    ss << "\n";
  }
  return ss.str();
}

}  // namespace newsei
