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
#include <atomic>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/corpus.hpp"
#include "newsei/date.hpp"
#include "newsei/eval.hpp"
#include "newsei/graph.hpp"
#include "newsei/providers.hpp"
#include "newsei/qa.hpp"
#include "newsei/text.hpp"

namespace newsei {

inline constexpr std::string_view kMockAbstention =
    "Up-to-date information for this query and date is not available.";

namespace mock_detail {

inline std::string strip_tags(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s.substr(i, 3) == "<e>") {
      i += 3;
    } else if (s.substr(i, 4) == "</e>") {
      i += 4;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

inline std::vector<std::string> tagged_surfaces(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t open = s.find("<e>"); open != std::string_view::npos; open = s.find("<e>", open + 3)) {
    const auto close = s.find("</e>", open);
    if (close == std::string_view::npos) break;
    out.emplace_back(s.substr(open + 3, close - open - 3));
  }
  return out;
}

/// Re-splits a space-joined excerpt. Good enough for excerpts rendered by
/// the prompt builders; not a general segmenter.
inline std::vector<std::string> split_sentences(std::string_view s) {
  static const auto abbreviations = [] {
    const auto list = default_abbreviations();
    return std::set<std::string>(list.begin(), list.end());
  }();
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const char c = s[i];
    if ((c != '.' && c != '!' && c != '?') || s[i + 1] != ' ') continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > start && s[w - 1] != ' ' && s[w - 1] != '>') --w;
      const std::string word = text::to_lower(s.substr(w, i + 1 - w));
      if (abbreviations.count(word) || (word.size() == 2 && text::is_alnum(word[0]))) continue;
    }
    const char next = i + 2 < s.size() ? s[i + 2] : '\0';
    if (!(text::is_upper(next) || text::is_digit(next) || next == '<' || next == '"')) continue;
    out.emplace_back(text::trim(s.substr(start, i + 1 - start)));
    start = i + 2;
  }
  if (start < s.size() && !text::trim(s.substr(start)).empty()) out.emplace_back(text::trim(s.substr(start)));
  return out;
}

inline std::string line_after(std::string_view prompt, std::string_view label) {
  const auto at = prompt.find(label);
  if (at == std::string_view::npos) return {};
  const auto begin = at + label.size();
  const auto end = prompt.find('\n', begin);
  return std::string(text::trim(prompt.substr(begin, end == std::string_view::npos ? end : end - begin)));
}

inline std::string block_after(std::string_view prompt, std::string_view header) {
  const auto at = prompt.find(header);
  if (at == std::string_view::npos) return {};
  const auto begin = prompt.find('\n', at);
  if (begin == std::string_view::npos) return {};
  const auto end = prompt.find("\n\n", begin + 1);
  return std::string(prompt.substr(begin + 1, end == std::string_view::npos ? end : end - begin - 1));
}

inline std::string m1_reply(std::string_view prompt) {
  const std::string subject = line_after(prompt, kSubjectLabel);
  const std::string date = line_after(prompt, kPublicationLabel);
  std::string out;
  for (const auto& sentence : split_sentences(block_after(prompt, kExcerptHeader))) {
    const auto plain = strip_tags(sentence);
    if (!text::icontains(plain, subject)) continue;
    const auto surfaces = tagged_surfaces(sentence);
    const bool other = std::any_of(surfaces.begin(), surfaces.end(), [&](const std::string& s) {
      return !text::icontains(subject, s) && !text::icontains(s, subject);
    });
    if (other) out += "(" + date + ", " + plain + ")\n";
  }
  return out.empty() ? "NONE" : out;
}

inline std::string m2_reply(std::string_view prompt) {
  const std::string subject = line_after(prompt, kSubjectLabel);
  const std::string object = line_after(prompt, kObjectLabel);
  std::string out;
  for (const auto& line : text::split_lines(block_after(prompt, kExcerptsHeader))) {
    if (line.size() < 11 || line[0] != '[' || line[9] != ']') continue;
    const std::string date = line.substr(1, 8);
    for (const auto& sentence : split_sentences(std::string_view(line).substr(11))) {
      const auto plain = strip_tags(sentence);
      if (text::icontains(plain, subject) && text::icontains(plain, object)) {
        out += "(" + date + ", " + plain + ")\n";
      }
    }
  }
  return out.empty() ? "NONE" : out;
}

inline std::string qa_reply(std::string_view prompt) {
  if (prompt.find(kNoPassagesLine) != std::string_view::npos) return std::string(kMockAbstention);
  std::string out;
  std::set<std::string> seen;
  for (const auto& line : text::split_lines(block_after(prompt, kPassagesHeader))) {
    // "[i] (YYYYMMDD) text"
    const auto open = line.find("] (");
    if (open == std::string::npos || line.size() < open + 13) continue;
    const std::string date = line.substr(open + 3, 8);
    const std::string body = line.substr(open + 13);
    if (!seen.insert(date + body).second) continue;
    if (!out.empty()) out += " ";
    out += "On " + date + ": " + body;
  }
  return out.empty() ? std::string(kMockAbstention) : out;
}

inline std::vector<DateStamp> dates_in(std::string_view s) {
  std::vector<DateStamp> out;
  for (std::size_t i = 0; i + 8 <= s.size(); ++i) {
    if ((i > 0 && text::is_digit(s[i - 1])) || (i + 8 < s.size() && text::is_digit(s[i + 8]))) continue;
    if (auto d = DateStamp::try_parse(s.substr(i, 8))) out.push_back(*d);
  }
  return out;
}

inline std::string judge_reply(std::string_view prompt) {
  const auto input_at = prompt.find("## Input to be rated");
  const std::string_view input = input_at == std::string_view::npos ? prompt : prompt.substr(input_at);
  const auto resp_at = input.find(kResponseLabel);
  const std::string response(
      text::trim(resp_at == std::string_view::npos ? std::string_view{} : input.substr(resp_at + kResponseLabel.size())));
  const std::string question = line_after(input, kUserQueryLabel);
  const bool abstains = response.empty() || response == kMockAbstention;

  int rating = 0;
  std::string reason;
  if (prompt.find("## Faithfulness Criterion") != std::string_view::npos) {
    std::size_t total = 0, used = 0;
    const auto passages_at = input.find(kJudgePassagesLabel);
    const auto block = input.substr(passages_at, resp_at - passages_at);
    for (const auto& line : text::split_lines(block)) {
      // "[i] (YYYYMMDD) text"
      const auto close = line.find(") ");
      if (line.empty() || line[0] != '[' || close == std::string::npos) continue;
      ++total;
      if (response.find(line.substr(close + 2)) != std::string::npos) ++used;
    }
    rating = total == 0 ? (abstains ? 2 : 0) : used == total ? 2 : used > 0 ? 1 : 0;
    reason = std::to_string(used) + " of " + std::to_string(total) + " passages used";
  } else if (prompt.find("## Relevance Criterion") != std::string_view::npos) {
    const auto dates = dates_in(response);
    const bool on_date = std::any_of(dates.begin(), dates.end(), [&](DateStamp d) {
      return question.find("(Date: " + d.natural() + ")") != std::string::npos;
    });
    rating = abstains ? 0 : on_date ? 2 : 1;
    reason = abstains ? "no information" : on_date ? "covers the query date" : "dates differ from the query date";
  } else {
    rating = abstains ? 0 : text::utf8_length(response) >= 200 ? 2 : 1;
    reason = abstains ? "no information" : rating == 2 ? "detailed answer" : "brief answer";
  }
  return nlohmann::json{{"rating", rating}, {"reason", reason}}.dump();
}

}  // namespace mock_detail

/// Offline stand-in for a chat model. A pure function of the prompt: it
/// recognises the extraction, answering and judging prompts and answers
/// them by copying text out of the prompt.
class RuleBasedLlm final : public LlmClient {
 public:
  std::string complete(const std::string& prompt, const GenerationParams&) override {
    calls_.fetch_add(1);
    if (text::starts_with(prompt, "## Task Description")) return mock_detail::judge_reply(prompt);
    if (prompt.find(std::string(kExcerptsHeader) + "\n") != std::string::npos) return mock_detail::m2_reply(prompt);
    if (prompt.find(std::string(kExcerptHeader) + "\n") != std::string::npos) return mock_detail::m1_reply(prompt);
    if (prompt.find(kQuestionLabel) != std::string::npos) return mock_detail::qa_reply(prompt);
    return "NONE";
  }

  std::string model_id() const override { return "rule-based-mock"; }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

}  // namespace newsei
