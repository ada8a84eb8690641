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
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/date.hpp"
#include "newsei/error.hpp"
#include "newsei/text.hpp"

namespace newsei {

struct EntityMention {
  std::string entity_id;
  std::string surface;
  std::size_t sentence_index = 0;
  /// Byte offset of the surface inside its sentence.
  std::size_t offset = 0;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// One attestation of a chunk: the article it was cut from.
struct SourceRecord {
  std::string article_id;
  std::string source;
  DateStamp date;

  friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

struct Article {
  std::string id;
  std::string source;
  std::string url;
  DateStamp date;
  std::string body;  // as received, markup included
  std::vector<std::string> sentences;
  std::vector<EntityMention> mentions;
};

struct Chunk {
  std::string article_id;
  std::size_t first_sentence = 0;
  std::vector<std::string> sentences;
  /// Sentence indices here are relative to the chunk.
  std::vector<EntityMention> mentions;
  std::set<std::string> entities;
  DateStamp date;
  std::vector<SourceRecord> provenance;

  std::string text() const { return text::join(sentences, " "); }

  bool has_entity(const std::string& id) const { return entities.count(id) > 0; }

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Processing order shared by dedup and batching.
inline bool chunk_order_less(const Chunk& a, const Chunk& b) {
  return std::tie(a.date, a.article_id, a.first_sentence) <
         std::tie(b.date, b.article_id, b.first_sentence);
}

// ---------------------------------------------------------------------------
// Sentence segmentation

/// Default abbreviation list; data/abbreviations.txt ships the same entries.
inline const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> kList = {
      "mr.",   "mrs.",  "ms.",   "dr.",  "prof.", "sr.",   "jr.",   "st.",
      "mt.",   "ft.",   "gen.",  "gov.", "sen.",  "rep.",  "lt.",   "col.",
      "capt.", "sgt.",  "rev.",  "hon.", "pres.", "inc.",  "ltd.",  "co.",
      "corp.", "vs.",   "etc.",  "e.g.", "i.e.",  "u.s.",  "u.k.",  "u.n.",
      "no.",   "jan.",  "feb.",  "mar.", "apr.",  "jun.",  "jul.",  "aug.",
      "sep.",  "sept.", "oct.",  "nov.", "dec.",  "approx.", "dept.", "est.",
      "fig.",  "a.m.",  "p.m."};
  return kList;
}

struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Rule-based splitter: a sentence ends at terminal punctuation (plus any
/// closing quotes/brackets) followed by whitespace and an uppercase letter or
/// digit, or at a blank line. Known abbreviations, single-letter initials and
/// protected spans (entity mentions) never end a sentence.
class SentenceSegmenter {
 public:
  SentenceSegmenter() : SentenceSegmenter(default_abbreviations()) {}

  explicit SentenceSegmenter(const std::vector<std::string>& abbreviations) {
    for (const auto& a : abbreviations) {
      const auto t = text::trim(a);
      if (!t.empty() && t.front() != '#') abbreviations_.insert(text::to_lower(t));
    }
  }

  /// One abbreviation per line; '#' starts a comment line.
  static SentenceSegmenter from_file(const std::string& path) {
    std::vector<std::string> entries;
    for (auto& line : text::split_lines(text::read_file(path))) entries.push_back(line);
    return SentenceSegmenter(entries);
  }

  const std::unordered_set<std::string>& abbreviations() const { return abbreviations_; }

  std::vector<TextSpan> segment(std::string_view s,
                                const std::vector<TextSpan>& protect = {}) const {
    std::vector<TextSpan> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
      std::size_t b = start, e = end;
      while (b < e && text::is_space(s[b])) ++b;
      while (e > b && text::is_space(s[e - 1])) --e;
      if (e > b) out.push_back({b, e});
    };
    auto inside_protected = [&](std::size_t pos) {
      return std::any_of(protect.begin(), protect.end(), [pos](const TextSpan& p) {
        return pos >= p.begin && pos < p.end;
      });
    };

    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      if (c == '\n') {
        std::size_t j = i + 1;
        while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
        if (j < s.size() && s[j] == '\n' && !inside_protected(i)) {
          emit(i);
          start = j;
          i = j;
          continue;
        }
      }
      if ((c == '.' || c == '!' || c == '?') && !inside_protected(i)) {
        std::size_t end = i + 1;
        while (end < s.size() && (s[end] == '.' || s[end] == '!' || s[end] == '?')) ++end;
        while (end < s.size() && is_closer(s, end)) end += closer_width(s, end);
        std::size_t next = end;
        while (next < s.size() && text::is_space(s[next])) ++next;
        const bool has_gap = next > end;
        if (has_gap && next < s.size() && opens_sentence(s, next) &&
            !(c == '.' && end == i + 1 && is_abbreviation(s, i))) {
          emit(end);
          start = next;
          i = next;
          continue;
        }
        i = end;
        continue;
      }
      ++i;
    }
    emit(s.size());
    return out;
  }

 private:
  static bool is_closer(std::string_view s, std::size_t pos) {
    const char c = s[pos];
    if (c == '"' || c == '\'' || c == ')' || c == ']') return true;
    // U+201D right double quote, U+2019 right single quote
    return s.substr(pos, 3) == "\xE2\x80\x9D" || s.substr(pos, 3) == "\xE2\x80\x99";
  }
  static std::size_t closer_width(std::string_view s, std::size_t pos) {
    return static_cast<unsigned char>(s[pos]) == 0xE2 ? 3 : 1;
  }
  static bool opens_sentence(std::string_view s, std::size_t pos) {
    if (text::is_upper(s[pos]) || text::is_digit(s[pos])) return true;
    std::size_t next = pos;
    if (s[pos] == '"' || s[pos] == '\'' || s[pos] == '(' || s[pos] == '[') {
      next = pos + 1;
    } else if (s.substr(pos, 3) == "\xE2\x80\x9C" || s.substr(pos, 3) == "\xE2\x80\x98") {
      next = pos + 3;
    } else {
      return false;
    }
    return next < s.size() && (text::is_upper(s[next]) || text::is_digit(s[next]));
  }
  bool is_abbreviation(std::string_view s, std::size_t dot) const {
    std::size_t b = dot;
    while (b > 0 && !text::is_space(s[b - 1]) && s[b - 1] != '(' && s[b - 1] != '"') --b;
    const std::string token = text::to_lower(s.substr(b, dot + 1 - b));
    if (abbreviations_.count(token)) return true;
    // Single-letter initial such as "J." in "J. K. Rowling".
    return dot - b == 1 && text::is_upper(s[b]);
  }

  std::unordered_set<std::string> abbreviations_;
};

// ---------------------------------------------------------------------------
// Articles

namespace detail {

struct MarkupResult {
  std::string plain;
  struct Span {
    std::string entity_id;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Span> spans;
};

/// Strips `<e id="...">surface</e>` tags. Any other '<' is ordinary text.
inline MarkupResult strip_markup(std::string_view body) {
  MarkupResult out;
  out.plain.reserve(body.size());
  std::optional<MarkupResult::Span> open;
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '<' && body.substr(i, 4) == "</e>") {
      if (!open) throw Error(ErrorKind::MalformedMarkup, "closing tag without opening tag");
      open->end = out.plain.size();
      if (open->end == open->begin) {
        throw Error(ErrorKind::MalformedMarkup, "empty entity surface for " + open->entity_id);
      }
      out.spans.push_back(*open);
      open.reset();
      i += 4;
      continue;
    }
    if (body[i] == '<' && body.substr(i, 2) == "<e" && i + 2 < body.size() &&
        (body[i + 2] == ' ' || body[i + 2] == '>')) {
      if (open) throw Error(ErrorKind::MalformedMarkup, "nested or overlapping entity tags");
      const std::size_t close = body.find('>', i);
      if (close == std::string_view::npos) {
        throw Error(ErrorKind::MalformedMarkup, "unterminated entity tag");
      }
      const std::string_view attrs = body.substr(i + 2, close - i - 2);
      const std::size_t key = attrs.find("id=");
      if (key == std::string_view::npos || key + 3 >= attrs.size()) {
        throw Error(ErrorKind::MalformedMarkup, "entity tag without id");
      }
      const char quote = attrs[key + 3];
      if (quote != '"' && quote != '\'') {
        throw Error(ErrorKind::MalformedMarkup, "entity id must be quoted");
      }
      const std::size_t vend = attrs.find(quote, key + 4);
      if (vend == std::string_view::npos) {
        throw Error(ErrorKind::MalformedMarkup, "unterminated entity id");
      }
      std::string id(attrs.substr(key + 4, vend - key - 4));
      if (text::trim(id).empty()) throw Error(ErrorKind::MalformedMarkup, "empty entity id");
      open = MarkupResult::Span{std::move(id), out.plain.size(), 0};
      i = close + 1;
      continue;
    }
    out.plain.push_back(body[i]);
    ++i;
  }
  if (open) throw Error(ErrorKind::MalformedMarkup, "unclosed entity tag for " + open->entity_id);
  return out;
}

inline std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorKind::MissingInput, std::string("record lacks string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline Article parse_article(const nlohmann::json& record,
                             const SentenceSegmenter& segmenter = SentenceSegmenter()) {
  Article a;
  a.id = detail::require_string(record, "id");
  a.source = detail::require_string(record, "source");
  a.date = DateStamp::parse(detail::require_string(record, "date"));
  a.body = detail::require_string(record, "body");
  if (record.contains("url") && record.at("url").is_string()) a.url = record.at("url").get<std::string>();

  auto markup = detail::strip_markup(a.body);
  std::vector<TextSpan> protect;
  protect.reserve(markup.spans.size());
  for (const auto& sp : markup.spans) protect.push_back({sp.begin, sp.end});
  const auto spans = segmenter.segment(markup.plain, protect);

  a.sentences.reserve(spans.size());
  for (const auto& sp : spans) a.sentences.emplace_back(markup.plain.substr(sp.begin, sp.end - sp.begin));

  std::size_t sentence = 0;
  for (const auto& m : markup.spans) {
    while (sentence < spans.size() && spans[sentence].end <= m.begin) ++sentence;
    if (sentence == spans.size() || m.begin < spans[sentence].begin) {
      throw Error(ErrorKind::MalformedMarkup, "mention outside any sentence: " + m.entity_id);
    }
    a.mentions.push_back({m.entity_id, markup.plain.substr(m.begin, m.end - m.begin), sentence,
                          m.begin - spans[sentence].begin});
  }
  return a;
}

// ---------------------------------------------------------------------------
// Chunking

inline std::vector<Chunk> chunk_article(const Article& article, std::size_t m, std::size_t stride) {
  if (m == 0 || stride == 0 || stride > m) {
    throw Error(ErrorKind::ConfigError, "chunking requires m >= 1 and 1 <= stride <= m");
  }
  std::vector<Chunk> out;
  const std::size_t n = article.sentences.size();
  for (std::size_t offset = 0; offset < n; offset += stride) {
    const std::size_t end = std::min(n, offset + m);
    Chunk c;
    c.article_id = article.id;
    c.first_sentence = offset;
    c.date = article.date;
    c.sentences.assign(article.sentences.begin() + static_cast<std::ptrdiff_t>(offset),
                       article.sentences.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& mention : article.mentions) {
      if (mention.sentence_index >= offset && mention.sentence_index < end) {
        EntityMention local = mention;
        local.sentence_index -= offset;
        c.entities.insert(local.entity_id);
        c.mentions.push_back(std::move(local));
      }
    }
    c.provenance.push_back({article.id, article.source, article.date});
    out.push_back(std::move(c));
    if (end == n) break;
  }
  return out;
}

/// Chunk sentences with every entity mention wrapped in `<e>` and `</e>`.
inline std::vector<std::string> marked_sentences(const Chunk& chunk) {
  std::vector<std::string> out;
  out.reserve(chunk.sentences.size());
  for (std::size_t i = 0; i < chunk.sentences.size(); ++i) {
    std::vector<const EntityMention*> here;
    for (const auto& m : chunk.mentions) {
      if (m.sentence_index == i) here.push_back(&m);
    }
    std::sort(here.begin(), here.end(),
              [](const EntityMention* a, const EntityMention* b) { return a->offset < b->offset; });
    const std::string& s = chunk.sentences[i];
    std::string marked;
    std::size_t pos = 0;
    for (const auto* m : here) {
      if (m->offset < pos || m->offset + m->surface.size() > s.size()) continue;
      marked.append(s, pos, m->offset - pos);
      marked += "<e>";
      marked += m->surface;
      marked += "</e>";
      pos = m->offset + m->surface.size();
    }
    marked.append(s, pos, std::string::npos);
    out.push_back(std::move(marked));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Near-duplicate detection

/// Lowercased, ASCII-punctuation-stripped word tokens.
inline std::vector<std::string> shingle_tokens(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    if (text::is_ascii_punct(c)) continue;
    cleaned.push_back(text::lower(c));
  }
  return text::split_whitespace(cleaned);
}

/// Word trigrams. A text with one or two tokens yields a single shingle made
/// of all its tokens, so only token-free text has an empty set.
inline std::set<std::string> word_trigrams(std::string_view s) {
  const auto tokens = shingle_tokens(s);
  std::set<std::string> out;
  if (tokens.empty()) return out;
  if (tokens.size() < 3) {
    out.insert(text::join(tokens, " "));
    return out;
  }
  for (std::size_t i = 0; i + 3 <= tokens.size(); ++i) {
    out.insert(tokens[i] + ' ' + tokens[i + 1] + ' ' + tokens[i + 2]);
  }
  return out;
}

inline double trigram_jaccard(std::string_view a, std::string_view b) {
  const auto ta = word_trigrams(a);
  const auto tb = word_trigrams(b);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  std::size_t inter = 0;
  auto ia = ta.begin();
  auto ib = tb.begin();
  while (ia != ta.end() && ib != tb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(ta.size() + tb.size() - inter);
}

struct DedupOptions {
  double threshold = 0.8;
  /// Only compare chunks whose dates are at most this many days apart.
  std::optional<long> window_days;
};

namespace detail {

/// Same value as trigram_jaccard, over interned trigram ids.
inline double interned_jaccard(const std::vector<std::uint32_t>& a,
                               const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace detail

/// Greedy near-duplicate removal. Chunks are visited in (date, article,
/// offset) order; a chunk scoring >= threshold against an already retained
/// chunk is dropped and its provenance folded into the first such survivor.
/// Survivors keep their relative input order.
inline std::vector<Chunk> dedup_chunks(const std::vector<Chunk>& chunks, const DedupOptions& opts) {
  if (!(opts.threshold >= 0.0 && opts.threshold <= 1.0)) {
    throw Error(ErrorKind::ConfigError, "dedup threshold must lie in [0, 1]");
  }
  const std::size_t n = chunks.size();
  std::unordered_map<std::string, std::uint32_t> vocab;
  std::vector<std::vector<std::uint32_t>> shingles(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& tri : word_trigrams(chunks[i].text())) {
      auto [it, _] = vocab.emplace(tri, static_cast<std::uint32_t>(vocab.size()));
      shingles[i].push_back(it->second);
    }
    std::sort(shingles[i].begin(), shingles[i].end());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return chunk_order_less(chunks[a], chunks[b]);
  });

  std::vector<std::size_t> retained;
  std::vector<std::optional<std::size_t>> absorbed_by(n);
  for (std::size_t idx : order) {
    for (std::size_t r : retained) {
      if (opts.window_days &&
          std::abs(chunks[r].date.days_until(chunks[idx].date)) > *opts.window_days) {
        continue;
      }
      if (detail::interned_jaccard(shingles[idx], shingles[r]) >= opts.threshold) {
        absorbed_by[idx] = r;
        break;
      }
    }
    if (!absorbed_by[idx]) retained.push_back(idx);
  }

  std::vector<Chunk> result;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!absorbed_by[i]) {
      slot[i] = result.size();
      result.push_back(chunks[i]);
    }
  }
  // Fold provenance in processing order so the survivor's own entries stay first.
  for (std::size_t idx : order) {
    if (absorbed_by[idx]) {
      auto& prov = result[slot[*absorbed_by[idx]]].provenance;
      prov.insert(prov.end(), chunks[idx].provenance.begin(), chunks[idx].provenance.end());
    }
  }
  return result;
}

inline std::vector<Chunk> dedup_chunks(const std::vector<Chunk>& chunks, double threshold) {
  return dedup_chunks(chunks, DedupOptions{threshold, std::nullopt});
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const SourceRecord& r) {
  return {{"article_id", r.article_id}, {"source", r.source}, {"date", r.date.str()}};
}

inline nlohmann::json to_json(const Chunk& c) {
  nlohmann::json mentions = nlohmann::json::array();
  for (const auto& m : c.mentions) {
    mentions.push_back({{"entity_id", m.entity_id},
                        {"surface", m.surface},
                        {"sentence", m.sentence_index},
                        {"offset", m.offset}});
  }
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : c.provenance) prov.push_back(to_json(p));
  return {{"article_id", c.article_id},
          {"first_sentence", c.first_sentence},
          {"date", c.date.str()},
          {"sentences", c.sentences},
          {"entities", c.entities},
          {"mentions", std::move(mentions)},
          {"provenance", std::move(prov)}};
}

inline Chunk chunk_from_json(const nlohmann::json& j) {
  try {
    Chunk c;
    c.article_id = j.at("article_id").get<std::string>();
    c.first_sentence = j.at("first_sentence").get<std::size_t>();
    c.date = DateStamp::parse(j.at("date").get<std::string>());
    c.sentences = j.at("sentences").get<std::vector<std::string>>();
    c.entities = j.at("entities").get<std::set<std::string>>();
    for (const auto& m : j.at("mentions")) {
      c.mentions.push_back({m.at("entity_id").get<std::string>(), m.at("surface").get<std::string>(),
                            m.at("sentence").get<std::size_t>(), m.at("offset").get<std::size_t>()});
    }
    for (const auto& p : j.at("provenance")) {
      c.provenance.push_back({p.at("article_id").get<std::string>(), p.at("source").get<std::string>(),
                              DateStamp::parse(p.at("date").get<std::string>())});
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MissingInput, std::string("malformed chunk record: ") + e.what());
  }
}

/// Parses JSON-lines text; blank lines are skipped.
inline std::vector<nlohmann::json> parse_jsonl(std::string_view content) {
  std::vector<nlohmann::json> out;
  std::size_t lineno = 0;
  for (const auto& line : text::split_lines(content)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::MissingInput,
                  "invalid JSON on line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::string dump_jsonl(const std::vector<nlohmann::json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

/// Entity id -> display name, picked as the most frequent surface form
/// (ties: lexicographically smallest).
inline std::map<std::string, std::string> entity_names(const std::vector<Chunk>& chunks) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& c : chunks) {
    for (const auto& m : c.mentions) ++counts[m.entity_id][m.surface];
  }
  std::map<std::string, std::string> out;
  for (const auto& [id, surfaces] : counts) {
    const auto best = std::max_element(surfaces.begin(), surfaces.end(), [](const auto& a, const auto& b) {
      return a.second < b.second || (a.second == b.second && a.first > b.first);
    });
    out[id] = best->first;
  }
  return out;
}

}  // namespace newsei
