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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/datastore.hpp"
#include "newsei/date.hpp"
#include "newsei/error.hpp"
#include "newsei/providers.hpp"
#include "newsei/text.hpp"

namespace newsei {

struct LinkedEntity {
  std::string id;
  std::string name;
};

/// Maps query text onto canonical entities. Returns the rewritten text and
/// appends the ids it resolved.
class EntityLinker {
 public:
  virtual ~EntityLinker() = default;
  virtual std::string link(std::string_view query, std::vector<std::string>& linked_ids) const = 0;
};

/// Case-insensitive, longest-match, word-bounded dictionary lookup. Each
/// canonical name is also a key for itself.
class DictionaryLinker final : public EntityLinker {
 public:
  DictionaryLinker() = default;

  void add(std::string_view surface, const std::string& id, const std::string& name) {
    const std::string key = text::to_lower(text::trim(surface));
    if (key.empty()) return;
    entries_[key] = {id, name};
    const std::string self = text::to_lower(name);
    if (!self.empty() && !entries_.count(self)) entries_[self] = {id, name};
    longest_ = std::max({longest_, key.size(), self.size()});
  }

  /// {"<entity id>": {"name": "...", "surfaces": ["...", ...]}, ...}
  static DictionaryLinker from_json(const nlohmann::json& j) {
    DictionaryLinker linker;
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, "entity dictionary must be a JSON object");
    for (const auto& [id, entry] : j.items()) {
      const std::string name = entry.value("name", id);
      linker.add(name, id, name);
      if (entry.contains("surfaces")) {
        for (const auto& s : entry.at("surfaces")) linker.add(s.get<std::string>(), id, name);
      }
    }
    return linker;
  }

  bool empty() const noexcept { return entries_.empty(); }

  std::string link(std::string_view query, std::vector<std::string>& linked_ids) const override {
    std::string out;
    const std::string lowered = text::to_lower(query);
    std::size_t i = 0;
    while (i < query.size()) {
      const bool at_boundary = i == 0 || !text::is_alnum(query[i - 1]);
      if (at_boundary && text::is_alnum(query[i])) {
        const std::size_t max_len = std::min(longest_, query.size() - i);
        bool matched = false;
        for (std::size_t len = max_len; len > 0; --len) {
          const std::size_t end = i + len;
          if (end < query.size() && text::is_alnum(query[end])) continue;
          if (auto it = entries_.find(lowered.substr(i, len)); it != entries_.end()) {
            out += it->second.name;
            if (std::find(linked_ids.begin(), linked_ids.end(), it->second.id) == linked_ids.end()) {
              linked_ids.push_back(it->second.id);
            }
            i = end;
            matched = true;
            break;
          }
        }
        if (matched) continue;
      }
      out.push_back(query[i]);
      ++i;
    }
    return out;
  }

 private:
  std::map<std::string, LinkedEntity> entries_;
  std::size_t longest_ = 0;
};

struct TemporalQuery {
  std::string raw;
  DateStamp date;
  std::string reformulated;
  std::vector<std::string> linked_entities;
};

inline std::string date_prefix(DateStamp d) { return "(Date: " + d.natural() + ") "; }

namespace detail {

/// Removes a leading "(Date: ...)" so reformulating twice never stacks prefixes.
inline std::string_view strip_date_prefix(std::string_view q) {
  q = text::trim(q);
  if (!text::starts_with(q, "(Date: ")) return q;
  const std::size_t close = q.find(')');
  if (close == std::string_view::npos) return q;
  return text::trim(q.substr(close + 1));
}

}  // namespace detail

/// "(Date: <Month D, YYYY>) " + the query with linked surfaces replaced by
/// canonical names.
inline TemporalQuery reformulate(std::string_view q, DateStamp t_q, const EntityLinker* linker = nullptr) {
  TemporalQuery tq;
  tq.raw = std::string(q);
  tq.date = t_q;
  const std::string_view body = detail::strip_date_prefix(q);
  const std::string linked = linker ? linker->link(body, tq.linked_entities) : std::string(body);
  tq.reformulated = date_prefix(t_q) + linked;
  return tq;
}

enum class Strategy { Temporal, Generic, Hybrid };

inline std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Temporal: return "temporal";
    case Strategy::Generic: return "generic";
    case Strategy::Hybrid: return "hybrid";
  }
  return "temporal";
}

inline Strategy strategy_from_string(std::string_view s) {
  if (s == "temporal") return Strategy::Temporal;
  if (s == "generic") return Strategy::Generic;
  if (s == "hybrid") return Strategy::Hybrid;
  throw Error(ErrorKind::ConfigError, "unknown retrieval strategy '" + std::string(s) + "'");
}

struct QaResponse {
  std::string text;
  std::vector<ScoredEntry> support;
  TemporalQuery query;
  Strategy strategy = Strategy::Temporal;
  std::string model_info;
  std::string prompt;
};

inline constexpr std::string_view kQuestionLabel = "Question: ";
inline constexpr std::string_view kPassagesHeader = "Supporting passages:";
inline constexpr std::string_view kNoPassagesLine = "Supporting passages: none were found for this date.";

inline std::string one_line(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

/// Passages numbered from 1, each prefixed with its date.
inline std::string render_passages(const std::vector<ScoredEntry>& support) {
  std::string out;
  for (std::size_t i = 0; i < support.size(); ++i) {
    out += "[" + std::to_string(i + 1) + "] (" + support[i].entry.date.str() + ") " + one_line(support[i].entry.text) +
           "\n";
  }
  return out;
}

inline std::string build_rag_prompt(const TemporalQuery& q, const std::vector<ScoredEntry>& support) {
  std::string p;
  if (support.empty()) {
    p += "Answer the news question below. The question is tied to the date given at its start.\n\n";
    p += std::string(kQuestionLabel) + q.reformulated + "\n\n";
    p += std::string(kNoPassagesLine) + "\n\n";
    p += "Instructions: Reply that up-to-date information for this query and date is not available. Do not "
         "guess and do not add facts from memory.\n";
    return p;
  }
  p += "Answer the news question below using only the supporting passages. The question is tied to the date "
       "given at its start.\n\n";
  p += std::string(kQuestionLabel) + q.reformulated + "\n\n";
  p += std::string(kPassagesHeader) + "\n" + render_passages(support) + "\n";
  p += "Instructions: Use only the information in the supporting passages that is relevant to the question "
       "date. State the relevant date or dates in your answer. Do not add facts that are not stated in the "
       "passages.\n";
  return p;
}

struct AnswerOptions {
  Strategy strategy = Strategy::Temporal;
  std::size_t k = 10;
  long r = 3;
  GenerationParams params;
};

inline std::vector<ScoredEntry> retrieve(const Datastore& store, std::span<const double> query, DateStamp t_q,
                                         const AnswerOptions& opts) {
  if (store.empty()) return {};
  switch (opts.strategy) {
    case Strategy::Temporal: return retrieve_temporal(store, query, t_q, opts.k, opts.r);
    case Strategy::Generic: return retrieve_generic(store, query, opts.k);
    case Strategy::Hybrid: return retrieve_hybrid(store, query, t_q, opts.k, opts.r);
  }
  return {};
}

/// Retrieves with the reformulated query, renders the grounded prompt (or
/// the abstention prompt when nothing comes back) and asks the model.
inline QaResponse answer(const TemporalQuery& tq, const Datastore& store, Embedder& embedder, LlmClient& llm,
                         const AnswerOptions& opts = {}) {
  QaResponse resp;
  resp.query = tq;
  resp.strategy = opts.strategy;
  resp.model_info = llm.model_id();
  const Vector qv = embedder.embed(tq.reformulated);
  resp.support = retrieve(store, qv, tq.date, opts);
  resp.prompt = build_rag_prompt(tq, resp.support);
  resp.text = llm.complete(resp.prompt, opts.params);
  return resp;
}

inline nlohmann::json to_json(const QaResponse& r, const std::string& method) {
  nlohmann::json support = nlohmann::json::array();
  for (const auto& s : r.support) {
    support.push_back({{"id", s.entry.id},
                       {"date", s.entry.date.str()},
                       {"text", s.entry.text},
                       {"score", s.score},
                       {"tier", std::string(to_string(s.tier))}});
  }
  return {{"query", r.query.raw},
          {"reformulated", r.query.reformulated},
          {"date", r.query.date.str()},
          {"strategy", std::string(to_string(r.strategy))},
          {"method", method},
          {"answer", r.text},
          {"support", std::move(support)}};
}

}  // namespace newsei
