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

// Fixture generators and brute-force oracles shared by the unit tests and
// the acceptance runner. The oracles are deliberately naive and do not call
// into the library code they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "newsei/newsei.hpp"

#ifndef NEWSEI_SOURCE_DIR
#define NEWSEI_SOURCE_DIR "."
#endif

namespace testing_support {

using namespace newsei;

inline std::string source_path(const std::string& rel) { return std::string(NEWSEI_SOURCE_DIR) + "/" + rel; }

/// Fresh scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("newsei-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

/// std::mt19937_64's output sequence is fixed by the standard; the helpers
/// below avoid the distribution classes, whose output is not.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  std::uint64_t below(std::uint64_t n) { return gen() % n; }
  bool chance(unsigned percent) { return below(100) < percent; }
};

// ---------------------------------------------------------------------------
// Synthetic articles with planted near-duplicates

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w;
    const char* syll[] = {"ka", "lo", "mi", "ten", "ra", "vo", "shi", "pel", "dun", "ar", "qui", "zo"};
    for (auto a : syll) {
      for (auto b : syll) w.push_back(std::string(a) + b);
    }
    return w;
  }();
  return words;
}

inline std::string random_sentence(Rng& rng, std::size_t words) {
  const auto& v = vocabulary();
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    std::string w = v[rng.below(v.size())];
    if (i == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    s += (i ? " " : "") + w;
  }
  return s + ".";
}

/// Swaps about `percent` of the words of each sentence for random ones.
inline std::string paraphrase(Rng& rng, const std::string& sentence, unsigned percent) {
  auto words = text::split_whitespace(sentence.substr(0, sentence.size() - 1));
  const auto& v = vocabulary();
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (rng.chance(percent)) words[i] = v[rng.below(v.size())];
  }
  return text::join(words, " ") + ".";
}

/// `n` articles of 6-11 sentences over 20 days. About a quarter are copies
/// of an earlier article: some lightly reworded (near-duplicates), some
/// heavily reworded (distinct).
inline std::vector<nlohmann::json> synthetic_articles(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> bodies;
  std::vector<nlohmann::json> out;
  const DateStamp start = DateStamp::parse("20240101");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> sentences;
    if (!bodies.empty() && rng.chance(25)) {
      const auto& src = bodies[rng.below(bodies.size())];
      const unsigned percent = rng.chance(60) ? 3 : 45;
      for (const auto& s : src) sentences.push_back(paraphrase(rng, s, percent));
    } else {
      const std::size_t count = 6 + rng.below(6);
      for (std::size_t k = 0; k < count; ++k) sentences.push_back(random_sentence(rng, 8 + rng.below(8)));
    }
    bodies.push_back(sentences);
    const auto date = start.plus_days(static_cast<long>(rng.below(20)));
    char id[32];
    std::snprintf(id, sizeof id, "art%03zu", i);
    out.push_back({{"id", id},
                   {"source", "src" + std::to_string(rng.below(5))},
                   {"date", date.str()},
                   {"body", text::join(sentences, " ")}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dedup oracle: independent trigram sets and the full pairwise matrix.

inline std::set<std::string> oracle_trigrams(const std::string& s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    if (std::isspace(u)) {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  std::set<std::string> out;
  if (tokens.empty()) return out;
  if (tokens.size() < 3) {
    std::string all;
    for (std::size_t i = 0; i < tokens.size(); ++i) all += (i ? " " : "") + tokens[i];
    out.insert(all);
    return out;
  }
  for (std::size_t i = 0; i + 2 < tokens.size(); ++i) out.insert(tokens[i] + " " + tokens[i + 1] + " " + tokens[i + 2]);
  return out;
}

inline double oracle_jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::string> inter, uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

/// Keys ("article#offset") of the chunks that survive: in (date, article,
/// offset) order, a chunk survives unless it reaches the threshold against
/// an earlier survivor.
inline std::vector<std::string> oracle_dedup_keys(const std::vector<Chunk>& chunks, double threshold) {
  const std::size_t n = chunks.size();
  std::vector<std::set<std::string>> tri(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string joined;
    for (std::size_t k = 0; k < chunks[i].sentences.size(); ++k) joined += (k ? " " : "") + chunks[i].sentences[k];
    tri[i] = oracle_trigrams(joined);
  }
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sim[i][j] = oracle_jaccard(tri[i], tri[j]);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(chunks[a].date, chunks[a].article_id, chunks[a].first_sentence, a) <
           std::tie(chunks[b].date, chunks[b].article_id, chunks[b].first_sentence, b);
  });
  std::vector<bool> keep(n, false);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order[pos];
    bool dup = false;
    for (std::size_t prev = 0; prev < pos && !dup; ++prev) dup = keep[order[prev]] && sim[i][order[prev]] >= threshold;
    keep[i] = !dup;
  }
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) keys.push_back(chunks[i].article_id + "#" + std::to_string(chunks[i].first_sentence));
  }
  return keys;
}

inline std::multiset<std::tuple<std::string, std::string, std::string>> provenance_multiset(
    const std::vector<Chunk>& chunks) {
  std::multiset<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& c : chunks) {
    for (const auto& p : c.provenance) out.insert({p.article_id, p.source, p.date.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// TF-IDF oracle

struct OraclePair {
  std::string subject, object;
  double score;
};

/// For each subject: every other entity scored by co-occurring chunk count
/// times ln(N / (1 + chunks containing it)), best first, ties by id.
inline std::vector<OraclePair> oracle_top_pairs(const std::vector<Chunk>& chunks, const std::set<std::string>& subjects,
                                                std::size_t top) {
  std::set<std::string> all;
  for (const auto& c : chunks) all.insert(c.entities.begin(), c.entities.end());
  std::vector<OraclePair> out;
  for (const auto& s : subjects) {
    std::vector<OraclePair> scored;
    for (const auto& o : all) {
      if (o == s) continue;
      std::size_t tf = 0, df = 0;
      for (const auto& c : chunks) {
        const bool has_o = c.entities.count(o) > 0;
        df += has_o;
        tf += has_o && c.entities.count(s) > 0;
      }
      if (tf == 0) continue;
      scored.push_back({s, o, static_cast<double>(tf) * std::log(static_cast<double>(chunks.size()) / (1.0 + df))});
    }
    std::sort(scored.begin(), scored.end(), [](const OraclePair& a, const OraclePair& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.object < b.object;
    });
    if (scored.size() > top) scored.resize(top);
    out.insert(out.end(), scored.begin(), scored.end());
  }
  return out;
}

/// Chunks over entities E00..E19 with planted frequencies: entity Ek shows
/// up with probability falling in k, and a few fixed co-occurrence blocks
/// create exact score ties.
inline std::vector<Chunk> planted_chunks(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Chunk> out;
  for (std::size_t i = 0; i < n; ++i) {
    Chunk c;
    c.article_id = "c" + std::to_string(100 + i);
    c.date = DateStamp::parse("20240301").plus_days(static_cast<long>(i % 7));
    c.sentences = {"Synthetic chunk " + std::to_string(i) + "."};
    for (int k = 0; k < 20; ++k) {
      char id[8];
      std::snprintf(id, sizeof id, "E%02d", k);
      if (rng.chance(static_cast<unsigned>(60 - 2 * k))) c.entities.insert(id);
    }
    // E18 and E19 always travel together, so they tie for every subject.
    if (i % 4 == 0) {
      c.entities.insert("E18");
      c.entities.insert("E19");
    } else {
      c.entities.erase("E18");
      c.entities.erase("E19");
    }
    c.provenance.push_back({c.article_id, "planted", c.date});
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Retrieval oracle

struct OracleHit {
  std::uint64_t id;
  double score;
  Tier tier;
};

inline double oracle_cosine(const std::vector<double>& q, std::span<const float> v) {
  double dot = 0, nq = 0, nv = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    dot += q[i] * static_cast<double>(v[i]);
    nq += q[i] * q[i];
    nv += static_cast<double>(v[i]) * static_cast<double>(v[i]);
  }
  if (nq == 0 || nv == 0) return 0;
  return dot / (std::sqrt(nq) * std::sqrt(nv));
}

/// Full scan: score everything, sort, then take from the exact-date group
/// and the +-r group in that order.
inline std::vector<OracleHit> oracle_temporal(const Datastore& store, const std::vector<double>& q, DateStamp t_q,
                                              std::size_t k, long r) {
  std::vector<OracleHit> all;
  for (std::uint64_t id = 0; id < store.size(); ++id) all.push_back({id, oracle_cosine(q, store.vector(id)), Tier::Generic});
  std::sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  std::vector<OracleHit> out;
  for (const auto& h : all) {
    if (out.size() < k && store.entry(h.id).date == t_q) out.push_back({h.id, h.score, Tier::ExactDate});
  }
  for (const auto& h : all) {
    const long gap = std::labs(t_q.days_until(store.entry(h.id).date));
    if (out.size() < k && gap > 0 && gap <= r) out.push_back({h.id, h.score, Tier::Backoff});
  }
  return out;
}

inline std::vector<OracleHit> oracle_generic(const Datastore& store, const std::vector<double>& q, std::size_t k) {
  std::vector<OracleHit> all;
  for (std::uint64_t id = 0; id < store.size(); ++id) all.push_back({id, oracle_cosine(q, store.vector(id)), Tier::Generic});
  std::sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

inline bool same_hits(const std::vector<ScoredEntry>& got, const std::vector<OracleHit>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i].entry.id != want[i].id || got[i].score != want[i].score || got[i].tier != want[i].tier) return false;
  }
  return true;
}

/// Dated documents drawn from a small vocabulary so that similarity ties
/// occur; dates spread over 60 days.
inline std::vector<Document> random_documents(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto& v = vocabulary();
  std::vector<Document> docs;
  const DateStamp start = DateStamp::parse("20230801");
  for (std::size_t i = 0; i < n; ++i) {
    std::string t;
    const std::size_t words = 1 + rng.below(6);
    for (std::size_t w = 0; w < words; ++w) t += (w ? " " : "") + v[rng.below(40)];
    docs.push_back({start.plus_days(static_cast<long>(rng.below(60))), t, nlohmann::json{{"n", i}}});
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Spike oracle: rolling sums from scratch, mean and population sd in long
// double.

inline std::vector<std::size_t> oracle_spikes(const std::vector<long long>& counts, std::size_t window) {
  std::vector<long double> sums;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long double s = 0;
    for (std::size_t j = (i + 1 >= window ? i + 1 - window : 0); j <= i; ++j) s += counts[j];
    sums.push_back(s);
  }
  long double mean = 0;
  for (auto s : sums) mean += s;
  mean /= sums.size();
  long double var = 0;
  for (auto s : sums) var += (s - mean) * (s - mean);
  var /= sums.size();
  const long double cut = mean + std::sqrt(var);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (sums[i] > cut) out.push_back(i);
  }
  return out;
}

inline DailySeries make_series(const std::string& entity, const std::string& first, const std::vector<long long>& counts) {
  DailySeries s{entity, {}};
  const auto d0 = DateStamp::parse(first);
  for (std::size_t i = 0; i < counts.size(); ++i) s.points.emplace_back(d0.plus_days(static_cast<long>(i)), counts[i]);
  return s;
}

inline std::vector<std::size_t> spike_indices(const DailySeries& s, const std::vector<DateStamp>& dates) {
  std::vector<std::size_t> out;
  for (auto d : dates) out.push_back(static_cast<std::size_t>(s.points.front().first.days_until(d)));
  return out;
}

/// 120 days of noise around 20 with bursts planted at days 30-32 and 85-86.
inline std::vector<long long> planted_burst_series(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<long long> c(120);
  for (auto& x : c) x = 15 + static_cast<long long>(rng.below(11));
  for (int d : {30, 31, 32}) c[d] += 90;
  for (int d : {85, 86}) c[d] += 70;
  return c;
}

// ---------------------------------------------------------------------------
// Chunk builder for hand-made fixtures.

struct MentionSpec {
  std::string id;
  std::string surface;
};

/// One-sentence-per-entry chunk; every listed surface is located in the
/// sentence text to set mention offsets.
inline Chunk make_chunk(const std::string& article, const std::string& date, const std::vector<std::string>& sentences,
                        const std::vector<MentionSpec>& mentions, const std::string& source = "wire") {
  Chunk c;
  c.article_id = article;
  c.date = DateStamp::parse(date);
  c.sentences = sentences;
  for (const auto& m : mentions) {
    for (std::size_t si = 0; si < sentences.size(); ++si) {
      const auto at = sentences[si].find(m.surface);
      if (at != std::string::npos) {
        c.mentions.push_back({m.id, m.surface, si, at});
        c.entities.insert(m.id);
      }
    }
  }
  std::sort(c.mentions.begin(), c.mentions.end(), [](const EntityMention& a, const EntityMention& b) {
    return std::tie(a.sentence_index, a.offset) < std::tie(b.sentence_index, b.offset);
  });
  c.provenance.push_back({article, source, c.date});
  return c;
}

// ---------------------------------------------------------------------------
// Golden files

/// Compares `actual` with tests/golden/<name>. With NEWSEI_UPDATE_GOLDEN=1
/// the file is rewritten instead.
inline bool matches_golden(const std::string& name, const std::string& actual, std::string* expected_out = nullptr) {
  const std::string path = source_path("tests/golden/" + name);
  if (const char* u = std::getenv("NEWSEI_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    text::write_file(path, actual);
    return true;
  }
  std::string expected;
  try {
    expected = text::read_file(path);
  } catch (const Error&) {
    return false;
  }
  if (expected_out) *expected_out = expected;
  return expected == actual;
}

// ---------------------------------------------------------------------------
// Toy pipeline, in process, with the offline providers. Returns artifact
// name -> file content.

inline std::map<std::string, std::string> run_toy_pipeline(const std::string& work) {
  auto cfg = load_config(source_path("data/toy/config.json"));
  const std::string toy = source_path("data/toy");
  auto llm = make_llm(cfg, true);
  auto embedder = make_embedder(cfg, true);
  run_ingest(toy + "/articles.jsonl", work + "/chunks.jsonl", cfg, source_path("data/abbreviations.txt"));
  const auto extract = run_extract(work + "/chunks.jsonl", work + "/graph.jsonl", cfg.extraction.variant, cfg, *llm);
  run_index(work + "/graph.jsonl", IndexKind::Graph, work + "/store", *embedder);
  AnswerOptions opts{cfg.retrieval.strategy, cfg.retrieval.k, cfg.retrieval.r, cfg.generation()};
  run_query(toy + "/queries.jsonl", work + "/store", work + "/answers.jsonl", opts, "newsei", *embedder, *llm, {},
            toy + "/entities.json");
  run_eval(work + "/answers.jsonl", work + "/eval", cfg, attributes_from_string(cfg.eval.attributes), cfg.eval.mode,
           *llm);
  run_spikes(toy + "/querylog.jsonl", work + "/spikes.json", cfg);

  std::map<std::string, std::string> out;
  for (const char* name : {"chunks.jsonl", "graph.jsonl", "answers.jsonl", "spikes.json", "store/manifest.json",
                           "store/entries.jsonl", "store/vectors.f32", "eval/judgments.jsonl", "eval/report.json",
                           "eval/report.txt", "eval/lengths.json"}) {
    out[name] = text::read_file(work + "/" + name);
  }
  out["extract.json"] = extract.dump(2) + "\n";
  return out;
}

}  // namespace testing_support
