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
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/corpus.hpp"
#include "newsei/date.hpp"
#include "newsei/error.hpp"
#include "newsei/graph.hpp"
#include "newsei/providers.hpp"
#include "newsei/text.hpp"

namespace newsei {

/// dot(a, b) / (|a| |b|), accumulated in double; 0 when either norm is 0.
template <class T, class U>
double cosine(std::span<const T> a, std::span<const U> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "cosine of vectors with " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                    " components");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(b[i]);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double cosine(const Vector& a, const Vector& b) {
  return cosine(std::span<const double>(a), std::span<const double>(b));
}

enum class Tier { ExactDate, Backoff, Generic };

inline std::string_view to_string(Tier t) noexcept {
  switch (t) {
    case Tier::ExactDate: return "exact-date";
    case Tier::Backoff: return "backoff";
    case Tier::Generic: return "generic";
  }
  return "generic";
}

/// Something to index: a dated text plus the record it came from.
struct Document {
  DateStamp date;
  std::string text;
  nlohmann::json payload;
};

inline std::vector<Document> documents_from(const InteractionGraph& graph) {
  std::vector<Document> out;
  out.reserve(graph.interactions.size());
  for (const auto& i : graph.interactions) out.push_back({i.date, i.text, to_json(i)});
  return out;
}

/// Chunk stores back the plain-passage baseline: same datastore, chunk text.
inline std::vector<Document> documents_from(const std::vector<Chunk>& chunks) {
  std::vector<Document> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) out.push_back({c.date, c.text(), to_json(c)});
  return out;
}

struct StoreEntry {
  std::uint64_t id = 0;
  DateStamp date;
  std::string text;
  nlohmann::json payload;

  friend bool operator==(const StoreEntry&, const StoreEntry&) = default;
};

struct ScoredEntry {
  StoreEntry entry;
  double score = 0.0;
  Tier tier = Tier::Generic;
};

/// Immutable after construction. Vectors live in one flat float32 table,
/// row `id`.
class Datastore {
 public:
  static constexpr int kFormatVersion = 1;

  explicit Datastore(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  /// Documents whose embedding failed at index time.
  std::size_t skipped() const noexcept { return skipped_; }

  const std::vector<StoreEntry>& entries() const noexcept { return entries_; }
  const StoreEntry& entry(std::uint64_t id) const { return entries_.at(id); }
  std::span<const float> vector(std::uint64_t id) const {
    return {vectors_.data() + id * dimension_, dimension_};
  }
  const std::map<DateStamp, std::vector<std::uint64_t>>& by_date() const noexcept { return by_date_; }

  friend Datastore index(const std::vector<Document>& documents, Embedder& embedder);
  friend Datastore load(const std::string& dir, std::optional<std::size_t> expected_dimension);

 private:
  void append(DateStamp date, std::string text, nlohmann::json payload, std::span<const float> v) {
    const auto id = static_cast<std::uint64_t>(entries_.size());
    entries_.push_back({id, date, std::move(text), std::move(payload)});
    vectors_.insert(vectors_.end(), v.begin(), v.end());
    by_date_[date].push_back(id);
  }

  std::size_t dimension_;
  std::vector<StoreEntry> entries_;
  std::vector<float> vectors_;
  std::map<DateStamp, std::vector<std::uint64_t>> by_date_;
  std::size_t skipped_ = 0;
};

/// Embeds every document and assigns sequential ids. Documents whose
/// embedding throws or has the wrong length are skipped and counted.
inline Datastore index(const std::vector<Document>& documents, Embedder& embedder) {
  Datastore store(embedder.dimension());
  std::vector<float> row(store.dimension());
  for (const auto& doc : documents) {
    Vector v;
    try {
      v = embedder.embed(doc.text);
    } catch (const std::exception&) {
      ++store.skipped_;
      continue;
    }
    if (v.size() != store.dimension()) {
      ++store.skipped_;
      continue;
    }
    std::transform(v.begin(), v.end(), row.begin(), [](double x) { return static_cast<float>(x); });
    store.append(doc.date, doc.text, doc.payload, row);
  }
  return store;
}

namespace detail {

inline bool ranks_before(const ScoredEntry& a, const ScoredEntry& b) {
  return a.score > b.score || (a.score == b.score && a.entry.id < b.entry.id);
}

template <class Ids>
std::vector<ScoredEntry> top_scored(const Datastore& store, std::span<const double> query, const Ids& ids,
                                    std::size_t k, Tier tier) {
  struct Hit {
    std::uint64_t id;
    double score;
  };
  std::vector<Hit> hits;
  for (std::uint64_t id : ids) hits.push_back({id, cosine(query, store.vector(id))});
  const auto cmp = [](const Hit& a, const Hit& b) { return a.score > b.score || (a.score == b.score && a.id < b.id); };
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), cmp);
  std::vector<ScoredEntry> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back({store.entry(hits[i].id), hits[i].score, tier});
  return out;
}

inline void check_query(const Datastore& store, std::span<const double> query, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::ConfigError, "k must be >= 1");
  if (query.size() != store.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "query vector has " + std::to_string(query.size()) +
                                                  " components, store expects " + std::to_string(store.dimension()));
  }
}

}  // namespace detail

/// Entries dated exactly `t_q` by similarity, then, if fewer than k, entries
/// within +-r days (excluding t_q itself) by similarity. Exact-date hits
/// always precede back-off hits. Ties go to the smaller id.
inline std::vector<ScoredEntry> retrieve_temporal(const Datastore& store, std::span<const double> query,
                                                  DateStamp t_q, std::size_t k, long r) {
  detail::check_query(store, query, k);
  if (r < 0) throw Error(ErrorKind::ConfigError, "r must be >= 0");
  std::vector<ScoredEntry> out;
  if (auto it = store.by_date().find(t_q); it != store.by_date().end()) {
    out = detail::top_scored(store, query, it->second, k, Tier::ExactDate);
  }
  if (out.size() < k && r > 0) {
    std::vector<std::uint64_t> nearby;
    const auto lo = store.by_date().lower_bound(t_q.plus_days(-r));
    const auto hi = store.by_date().upper_bound(t_q.plus_days(r));
    for (auto it = lo; it != hi; ++it) {
      if (it->first == t_q) continue;
      nearby.insert(nearby.end(), it->second.begin(), it->second.end());
    }
    auto backoff = detail::top_scored(store, query, nearby, k - out.size(), Tier::Backoff);
    out.insert(out.end(), std::make_move_iterator(backoff.begin()), std::make_move_iterator(backoff.end()));
  }
  return out;
}

/// Global similarity top-k.
inline std::vector<ScoredEntry> retrieve_generic(const Datastore& store, std::span<const double> query,
                                                 std::size_t k) {
  detail::check_query(store, query, k);
  std::vector<std::uint64_t> all(store.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return detail::top_scored(store, query, all, k, Tier::Generic);
}

/// Temporal retrieval first, then topped up from global similarity with
/// entries not already chosen.
inline std::vector<ScoredEntry> retrieve_hybrid(const Datastore& store, std::span<const double> query,
                                                DateStamp t_q, std::size_t k, long r) {
  auto out = retrieve_temporal(store, query, t_q, k, r);
  if (out.size() >= k) return out;
  std::unordered_set<std::uint64_t> taken;
  for (const auto& s : out) taken.insert(s.entry.id);
  for (auto& s : retrieve_generic(store, query, std::min(store.size(), k + taken.size()))) {
    if (out.size() >= k) break;
    if (!taken.count(s.entry.id)) out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: manifest.json + entries.jsonl + vectors.f32 (little-endian
// float32, row `id` at offset id * dimension).

inline void save(const Datastore& store, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir + ": " + ec.message());
  const std::filesystem::path root(dir);

  const nlohmann::json manifest = {{"version", Datastore::kFormatVersion},
                                   {"dimension", store.dimension()},
                                   {"count", store.size()},
                                   {"skipped", store.skipped()}};
  text::write_file((root / "manifest.json").string(), manifest.dump(2) + "\n");

  std::string entries;
  for (const auto& e : store.entries()) {
    entries += nlohmann::json{{"id", e.id}, {"date", e.date.str()}, {"text", e.text}, {"payload", e.payload}}.dump();
    entries += '\n';
  }
  text::write_file((root / "entries.jsonl").string(), entries);

  std::string raw;
  raw.reserve(store.size() * store.dimension() * 4);
  for (std::uint64_t id = 0; id < store.size(); ++id) {
    for (float f : store.vector(id)) {
      const auto bits = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; ++b) raw.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    }
  }
  text::write_file((root / "vectors.f32").string(), raw);
}

/// Fails with VersionMismatch when the manifest's format version differs or
/// its dimension differs from `expected_dimension`.
inline Datastore load(const std::string& dir, std::optional<std::size_t> expected_dimension = std::nullopt) {
  const std::filesystem::path root(dir);
  auto read = [&](const char* name) { return text::read_file((root / name).string()); };
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read("manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::IoError, std::string("bad manifest: ") + e.what());
  }
  const int version = manifest.value("version", -1);
  if (version != Datastore::kFormatVersion) {
    throw Error(ErrorKind::VersionMismatch, "store format version " + std::to_string(version) + ", expected " +
                                                std::to_string(Datastore::kFormatVersion));
  }
  const auto dimension = manifest.value("dimension", std::size_t{0});
  const auto count = manifest.value("count", std::size_t{0});
  if (expected_dimension && *expected_dimension != dimension) {
    throw Error(ErrorKind::VersionMismatch, "store dimension " + std::to_string(dimension) + ", expected " +
                                                std::to_string(*expected_dimension));
  }

  const std::string raw = read("vectors.f32");
  if (raw.size() != count * dimension * 4) {
    throw Error(ErrorKind::IoError, "vectors.f32 holds " + std::to_string(raw.size()) + " bytes, manifest implies " +
                                        std::to_string(count * dimension * 4));
  }
  const auto records = parse_jsonl(read("entries.jsonl"));
  if (records.size() != count) throw Error(ErrorKind::IoError, "entries.jsonl count disagrees with manifest");

  Datastore store(dimension);
  store.skipped_ = manifest.value("skipped", std::size_t{0});
  std::vector<float> row(dimension);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& rec = records[i];
    if (rec.value("id", std::uint64_t{~0ULL}) != i) throw Error(ErrorKind::IoError, "entry ids are not sequential");
    for (std::size_t d = 0; d < dimension; ++d) {
      std::uint32_t bits = 0;
      const std::size_t at = (i * dimension + d) * 4;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[at + b])) << (8 * b);
      row[d] = std::bit_cast<float>(bits);
    }
    store.append(DateStamp::parse(rec.at("date").get<std::string>()), rec.at("text").get<std::string>(),
                 rec.at("payload"), row);
  }
  return store;
}

}  // namespace newsei
