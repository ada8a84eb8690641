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
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/corpus.hpp"
#include "newsei/date.hpp"
#include "newsei/error.hpp"
#include "newsei/parallel.hpp"
#include "newsei/providers.hpp"
#include "newsei/text.hpp"

namespace newsei {

/// Subject-centric prompts one (subject, chunk) at a time; pair-centric
/// prompts one (subject, object) pair over batches of co-mentioning chunks.
/// Serialized as "M1" and "M2".
enum class Variant { SubjectCentric, PairCentric };

inline std::string_view to_string(Variant v) noexcept { return v == Variant::SubjectCentric ? "M1" : "M2"; }

inline Variant variant_from_string(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "m1") return Variant::SubjectCentric;
  if (lower == "m2") return Variant::PairCentric;
  throw Error(ErrorKind::ConfigError, "unknown extraction variant '" + std::string(s) + "'");
}

struct ArticleRef {
  std::string article_id;
  std::string source;

  friend auto operator<=>(const ArticleRef&, const ArticleRef&) = default;
};

/// One timestamped, lexicalized interaction: a graph edge.
struct Interaction {
  DateStamp date;
  std::string subject;
  std::optional<std::string> object;
  std::string text;
  Variant variant = Variant::SubjectCentric;
  std::vector<ArticleRef> provenance;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct InteractionGraph {
  std::vector<Interaction> interactions;
  std::set<std::string> subjects;
  /// Earliest and latest interaction dates; empty graph has none.
  std::optional<std::pair<DateStamp, DateStamp>> timeframe;

  void refresh_timeframe() {
    timeframe.reset();
    for (const auto& i : interactions) {
      if (!timeframe) {
        timeframe = {i.date, i.date};
      } else {
        timeframe->first = std::min(timeframe->first, i.date);
        timeframe->second = std::max(timeframe->second, i.date);
      }
    }
  }
};

struct EntityPair {
  std::string subject;
  std::string object;
  double score = 0.0;

  friend bool operator==(const EntityPair&, const EntityPair&) = default;
};

/// An entity id with the name used for it in prompts.
struct NamedEntity {
  std::string id;
  std::string name;
};

// ---------------------------------------------------------------------------
// Target pairs and batching

/// Per subject, the `top_p` co-occurring entities ranked by
/// tf(s,o) * ln(N / (1 + df(o))), where tf counts chunks holding both
/// entities, df counts chunks holding o and N is the chunk count. Ties go to
/// the smaller object id. Subjects come out in ascending id order.
inline std::vector<EntityPair> select_target_pairs(const std::vector<Chunk>& chunks,
                                                   const std::set<std::string>& subjects, std::size_t top_p) {
  if (chunks.empty()) throw Error(ErrorKind::EmptyCorpus, "no chunks to mine entity pairs from");
  const double n = static_cast<double>(chunks.size());
  std::map<std::string, std::size_t> df;
  for (const auto& c : chunks) {
    for (const auto& e : c.entities) ++df[e];
  }
  std::vector<EntityPair> out;
  for (const auto& s : subjects) {
    std::map<std::string, std::size_t> tf;
    for (const auto& c : chunks) {
      if (!c.has_entity(s)) continue;
      for (const auto& o : c.entities) {
        if (o != s) ++tf[o];
      }
    }
    std::vector<EntityPair> ranked;
    ranked.reserve(tf.size());
    for (const auto& [o, count] : tf) {
      const double idf = std::log(n / (1.0 + static_cast<double>(df[o])));
      ranked.push_back({s, o, static_cast<double>(count) * idf});
    }
    std::sort(ranked.begin(), ranked.end(), [](const EntityPair& a, const EntityPair& b) {
      return a.score > b.score || (a.score == b.score && a.object < b.object);
    });
    if (ranked.size() > top_p) ranked.resize(top_p);
    out.insert(out.end(), ranked.begin(), ranked.end());
  }
  return out;
}

/// Sorts by (date, article, offset) and cuts consecutive groups of k; the
/// last group holds the remainder.
inline std::vector<std::vector<Chunk>> batch_chunks(std::vector<Chunk> chunks, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::ConfigError, "batch size k must be >= 1");
  std::stable_sort(chunks.begin(), chunks.end(), chunk_order_less);
  std::vector<std::vector<Chunk>> batches;
  for (std::size_t i = 0; i < chunks.size(); i += k) {
    const std::size_t end = std::min(chunks.size(), i + k);
    batches.emplace_back(std::make_move_iterator(chunks.begin() + static_cast<std::ptrdiff_t>(i)),
                         std::make_move_iterator(chunks.begin() + static_cast<std::ptrdiff_t>(end)));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Prompts

inline constexpr std::string_view kSubjectLabel = "Subject entity: ";
inline constexpr std::string_view kObjectLabel = "Object entity: ";
inline constexpr std::string_view kPublicationLabel = "Publication date: ";
inline constexpr std::string_view kExcerptHeader = "News excerpt:";
inline constexpr std::string_view kExcerptsHeader = "News excerpts:";

inline std::string build_prompt_m1(const NamedEntity& subject, const Chunk& chunk) {
  if (!chunk.has_entity(subject.id)) {
    throw Error(ErrorKind::SubjectNotInChunk, subject.id + " not mentioned in chunk of " + chunk.article_id);
  }
  std::string p;
  p += "You are an information extraction assistant for news. In the news excerpt below, every named "
       "entity is enclosed in entity tags.\n\n";
  p += kSubjectLabel;
  p += subject.name + "\n";
  p += kPublicationLabel;
  p += chunk.date.str() + "\n\n";
  p += kExcerptHeader;
  p += "\n" + text::join(marked_sentences(chunk), " ") + "\n\n";
  p += "List the interactions, such as events or activities, between the subject entity " + subject.name +
       " and the other tagged entities described in the excerpt. Write each interaction as one sentence "
       "that names " +
       subject.name +
       " and the other entity. Output one interaction per line in the form (YYYYMMDD, sentence), using "
       "the publication date. If the excerpt describes no such interaction, output NONE.\n";
  return p;
}

inline std::string build_prompt_m2(const NamedEntity& subject, const NamedEntity& object,
                                   const std::vector<Chunk>& batch) {
  if (batch.empty()) throw Error(ErrorKind::PairNotInChunk, "empty batch");
  for (const auto& c : batch) {
    if (!c.has_entity(subject.id) || !c.has_entity(object.id)) {
      throw Error(ErrorKind::PairNotInChunk,
                  "(" + subject.id + ", " + object.id + ") not both mentioned in chunk of " + c.article_id);
    }
  }
  std::string p;
  p += "You are an information extraction assistant for news. Each news excerpt below is prefixed with "
       "its publication date, and every named entity is enclosed in entity tags.\n\n";
  p += kSubjectLabel;
  p += subject.name + "\n";
  p += kObjectLabel;
  p += object.name + "\n\n";
  p += kExcerptsHeader;
  p += "\n";
  for (const auto& c : batch) p += "[" + c.date.str() + "] " + text::join(marked_sentences(c), " ") + "\n";
  p += "\nList the interactions, such as events or activities, that directly involve both " + subject.name +
       " and " + object.name +
       " in the excerpts. Write each interaction as one sentence that names both entities. Output one "
       "interaction per line in the form (YYYYMMDD, sentence), where YYYYMMDD is the publication date of "
       "the excerpt that reports it. If no interaction is confidently detected, output NONE.\n";
  return p;
}

// ---------------------------------------------------------------------------
// Output parsing

struct ExtractionContext {
  Variant variant = Variant::SubjectCentric;
  NamedEntity subject;
  std::optional<NamedEntity> object;
  /// The source chunk date (subject-centric) or the batch's chunk dates.
  std::vector<DateStamp> dates;
  std::map<DateStamp, std::vector<ArticleRef>> provenance;
};

inline std::vector<ArticleRef> article_refs(const Chunk& c) {
  std::vector<ArticleRef> out;
  for (const auto& p : c.provenance) out.push_back({p.article_id, p.source});
  return out;
}

inline ExtractionContext context_for_chunk(const NamedEntity& subject, const Chunk& chunk) {
  ExtractionContext ctx;
  ctx.variant = Variant::SubjectCentric;
  ctx.subject = subject;
  ctx.dates = {chunk.date};
  ctx.provenance[chunk.date] = article_refs(chunk);
  return ctx;
}

inline ExtractionContext context_for_batch(const NamedEntity& subject, const NamedEntity& object,
                                           const std::vector<Chunk>& batch) {
  ExtractionContext ctx;
  ctx.variant = Variant::PairCentric;
  ctx.subject = subject;
  ctx.object = object;
  for (const auto& c : batch) {
    ctx.dates.push_back(c.date);
    auto& refs = ctx.provenance[c.date];
    for (auto& r : article_refs(c)) {
      // Overlapping windows of one article cite the same refs.
      if (std::find(refs.begin(), refs.end(), r) == refs.end()) refs.push_back(std::move(r));
    }
  }
  return ctx;
}

struct ParsedExtractions {
  std::vector<Interaction> interactions;
  std::size_t accepted_lines = 0;
  /// Lines that looked like output but could not be accepted.
  std::size_t rejected = 0;
};

namespace detail {

inline std::string strip_entity_tags(std::string_view s) {
  std::string out;
  out.reserve(s.size());
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

inline std::string_view strip_list_marker(std::string_view line) {
  if (text::starts_with(line, "- ") || text::starts_with(line, "* ")) return text::trim(line.substr(2));
  if (text::starts_with(line, "\xE2\x80\xA2")) return text::trim(line.substr(3));  // bullet
  std::size_t i = 0;
  while (i < line.size() && text::is_digit(line[i])) ++i;
  if (i > 0 && i < 4 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') {
    return text::trim(line.substr(i + 2));
  }
  return line;
}

}  // namespace detail

/// Reads one `(YYYYMMDD, sentence)` tuple per line. NONE, `[]` and blank
/// lines yield nothing. Lines that are not tuples, carry an impossible date,
/// have no text, do not name the subject, or (pair-centric) carry a date
/// outside the batch are counted as rejects. Undated pair-centric tuples are
/// expanded to one interaction per distinct batch date. A repeated (date,
/// sentence) yields one interaction.
inline ParsedExtractions parse_extractions(std::string_view llm_output, const ExtractionContext& ctx) {
  ParsedExtractions out;
  std::set<DateStamp> batch_dates(ctx.dates.begin(), ctx.dates.end());
  auto refs_for = [&](DateStamp d) {
    auto it = ctx.provenance.find(d);
    return it == ctx.provenance.end() ? std::vector<ArticleRef>{} : it->second;
  };
  std::set<std::pair<DateStamp, std::string>> emitted;
  auto emit = [&](DateStamp d, const std::string& sentence) {
    if (!emitted.emplace(d, sentence).second) return;
    Interaction i;
    i.date = d;
    i.subject = ctx.subject.id;
    if (ctx.object) i.object = ctx.object->id;
    i.text = sentence;
    i.variant = ctx.variant;
    i.provenance = refs_for(d);
    out.interactions.push_back(std::move(i));
  };

  for (const auto& raw_line : text::split_lines(llm_output)) {
    std::string_view line = detail::strip_list_marker(text::trim(raw_line));
    if (line.empty() || line == "[]") continue;
    {
      std::string upper(line);
      for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (upper == "NONE" || upper == "NONE.") continue;
    }
    if (line.size() >= 2 && line.back() == '.' && line[line.size() - 2] == ')') line.remove_suffix(1);
    if (line.size() < 2 || line.front() != '(' || line.back() != ')') {
      ++out.rejected;
      continue;
    }
    std::string_view inner = text::trim(line.substr(1, line.size() - 2));

    std::optional<DateStamp> date;
    std::size_t digits = 0;
    while (digits < inner.size() && text::is_digit(inner[digits])) ++digits;
    if (digits == 8) {
      std::size_t pos = 8;
      while (pos < inner.size() && inner[pos] == ' ') ++pos;
      if (pos < inner.size() && inner[pos] == ',') {
        date = DateStamp::try_parse(inner.substr(0, 8));
        if (!date) {
          ++out.rejected;
          continue;
        }
        inner = text::trim(inner.substr(pos + 1));
      }
    }
    const std::string sentence(text::trim(detail::strip_entity_tags(inner)));
    if (sentence.empty() || !text::icontains(sentence, ctx.subject.name)) {
      ++out.rejected;
      continue;
    }

    if (ctx.variant == Variant::SubjectCentric) {
      // The source chunk's date always wins for subject-centric extraction.
      if (ctx.dates.empty()) {
        ++out.rejected;
        continue;
      }
      emit(ctx.dates.front(), sentence);
    } else if (date) {
      if (!batch_dates.count(*date)) {
        ++out.rejected;
        continue;
      }
      emit(*date, sentence);
    } else {
      for (const auto& d : batch_dates) emit(d, sentence);
    }
    ++out.accepted_lines;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extraction drivers

struct ExtractionOptions {
  GenerationParams params;
  std::size_t parallelism = 1;
};

struct ExtractionMetrics {
  std::size_t prompts = 0;
  std::size_t parsed_tuples = 0;
  std::size_t rejects = 0;
  std::size_t provider_failures = 0;
  std::size_t interactions = 0;

  nlohmann::json to_json() const {
    return {{"prompts", prompts},
            {"parsed_tuples", parsed_tuples},
            {"rejects", rejects},
            {"provider_failures", provider_failures},
            {"interactions", interactions}};
  }
};

struct ExtractionFailure {
  std::string subject;
  std::optional<std::string> object;
  std::vector<std::string> chunks;  // "article_id#first_sentence"
  std::string message;
};

struct ExtractionRun {
  InteractionGraph graph;
  ExtractionMetrics metrics;
  std::vector<ExtractionFailure> failures;
};

inline std::string chunk_key(const Chunk& c) { return c.article_id + "#" + std::to_string(c.first_sentence); }

namespace detail {

struct ExtractionTask {
  std::string prompt;
  ExtractionContext context;
  ExtractionFailure identity;
};

struct TaskOutcome {
  std::optional<ParsedExtractions> parsed;
  std::string error;
};

inline ExtractionRun run_tasks(std::vector<ExtractionTask> tasks, std::set<std::string> subjects, LlmClient& llm,
                               const ExtractionOptions& opts) {
  auto outcomes = parallel_map(tasks.size(), opts.parallelism, [&](std::size_t i) {
    TaskOutcome o;
    try {
      o.parsed = parse_extractions(llm.complete(tasks[i].prompt, opts.params), tasks[i].context);
    } catch (const ProviderError& e) {
      o.error = e.what();
    }
    return o;
  });

  ExtractionRun run;
  run.graph.subjects = std::move(subjects);
  run.metrics.prompts = tasks.size();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.parsed) {
      ++run.metrics.provider_failures;
      auto failure = std::move(tasks[i].identity);
      failure.message = std::move(o.error);
      run.failures.push_back(std::move(failure));
      continue;
    }
    run.metrics.parsed_tuples += o.parsed->accepted_lines;
    run.metrics.rejects += o.parsed->rejected;
    for (auto& interaction : o.parsed->interactions) run.graph.interactions.push_back(std::move(interaction));
  }
  run.metrics.interactions = run.graph.interactions.size();
  run.graph.refresh_timeframe();
  return run;
}

inline NamedEntity named(const std::string& id, const std::map<std::string, std::string>& names) {
  auto it = names.find(id);
  return {id, it == names.end() ? id : it->second};
}

}  // namespace detail

/// One prompt per (subject, chunk mentioning it); every interaction carries
/// its source chunk's date.
inline ExtractionRun extract_m1(const std::set<std::string>& subjects, const std::vector<Chunk>& chunks,
                                LlmClient& llm, const std::map<std::string, std::string>& names,
                                const ExtractionOptions& opts = {}) {
  std::vector<const Chunk*> ordered;
  for (const auto& c : chunks) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Chunk* a, const Chunk* b) { return chunk_order_less(*a, *b); });

  std::vector<detail::ExtractionTask> tasks;
  for (const auto& s : subjects) {
    const NamedEntity subject = detail::named(s, names);
    for (const Chunk* c : ordered) {
      if (!c->has_entity(s)) continue;
      tasks.push_back({build_prompt_m1(subject, *c), context_for_chunk(subject, *c),
                       ExtractionFailure{s, std::nullopt, {chunk_key(*c)}, {}}});
    }
  }
  return detail::run_tasks(std::move(tasks), subjects, llm, opts);
}

/// For each pair, batches the chunks mentioning both entities (k per batch,
/// date order) and issues one prompt per batch.
inline ExtractionRun extract_m2(const std::vector<EntityPair>& pairs, const std::vector<Chunk>& chunks,
                                LlmClient& llm, std::size_t k, const std::map<std::string, std::string>& names,
                                const ExtractionOptions& opts = {}) {
  if (k == 0) throw Error(ErrorKind::ConfigError, "batch size k must be >= 1");
  std::vector<detail::ExtractionTask> tasks;
  std::set<std::string> subjects;
  for (const auto& pair : pairs) {
    subjects.insert(pair.subject);
    const NamedEntity s = detail::named(pair.subject, names);
    const NamedEntity o = detail::named(pair.object, names);
    std::vector<Chunk> relevant;
    for (const auto& c : chunks) {
      if (c.has_entity(pair.subject) && c.has_entity(pair.object)) relevant.push_back(c);
    }
    for (auto& batch : batch_chunks(std::move(relevant), k)) {
      ExtractionFailure identity{pair.subject, pair.object, {}, {}};
      for (const auto& c : batch) identity.chunks.push_back(chunk_key(c));
      tasks.push_back({build_prompt_m2(s, o, batch), context_for_batch(s, o, batch), std::move(identity)});
    }
  }
  return detail::run_tasks(std::move(tasks), std::move(subjects), llm, opts);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const Interaction& i) {
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : i.provenance) prov.push_back({{"article_id", p.article_id}, {"source", p.source}});
  return {{"date", i.date.str()},
          {"subject", i.subject},
          {"object", i.object ? nlohmann::json(*i.object) : nlohmann::json(nullptr)},
          {"text", i.text},
          {"variant", std::string(to_string(i.variant))},
          {"provenance", std::move(prov)}};
}

inline Interaction interaction_from_json(const nlohmann::json& j) {
  try {
    Interaction i;
    i.date = DateStamp::parse(j.at("date").get<std::string>());
    i.subject = j.at("subject").get<std::string>();
    if (j.contains("object") && !j.at("object").is_null()) i.object = j.at("object").get<std::string>();
    i.text = j.at("text").get<std::string>();
    i.variant = variant_from_string(j.at("variant").get<std::string>());
    for (const auto& p : j.at("provenance")) {
      i.provenance.push_back({p.at("article_id").get<std::string>(), p.at("source").get<std::string>()});
    }
    return i;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MissingInput, std::string("malformed interaction record: ") + e.what());
  }
}

inline std::string graph_to_jsonl(const InteractionGraph& g) {
  std::string out;
  for (const auto& i : g.interactions) {
    out += to_json(i).dump();
    out += '\n';
  }
  return out;
}

/// Subjects are recovered from the interactions; pass `subjects` to keep
/// subjects that produced nothing.
inline InteractionGraph graph_from_jsonl(std::string_view content, std::set<std::string> subjects = {}) {
  InteractionGraph g;
  g.subjects = std::move(subjects);
  for (const auto& j : parse_jsonl(content)) {
    g.interactions.push_back(interaction_from_json(j));
    g.subjects.insert(g.interactions.back().subject);
  }
  g.refresh_timeframe();
  return g;
}

}  // namespace newsei
