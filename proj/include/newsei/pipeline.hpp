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

// Stage functions behind the command-line tool. Each stage reads its inputs
// from files and writes its outputs to files.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/config.hpp"
#include "newsei/corpus.hpp"
#include "newsei/datastore.hpp"
#include "newsei/eval.hpp"
#include "newsei/graph.hpp"
#include "newsei/mock_llm.hpp"
#include "newsei/providers.hpp"
#include "newsei/qa.hpp"
#include "newsei/querylog.hpp"
#include "newsei/text.hpp"

namespace newsei {

/// Supplies the HTTP transport for non-mock providers. The library stays
/// free of a network dependency; the command-line tool passes httplib.
using TransportFactory = std::function<std::shared_ptr<HttpTransport>(const std::string& endpoint)>;

inline HttpProviderConfig http_config(const ProviderSettings& p, int attempts) {
  HttpProviderConfig h;
  h.endpoint = p.endpoint;
  h.model = p.model;
  h.api_key_env = p.api_key_env;
  h.timeout = std::chrono::milliseconds(p.timeout_ms);
  h.retry.max_attempts = attempts;
  h.requests_per_second = p.requests_per_second;
  return h;
}

inline std::unique_ptr<LlmClient> make_llm(const PipelineConfig& cfg, bool force_mock,
                                           const TransportFactory& transport = {}) {
  if (force_mock || cfg.providers.llm.kind == "mock") return std::make_unique<RuleBasedLlm>();
  if (!transport) throw Error(ErrorKind::ConfigError, "no HTTP transport available for the LLM provider");
  return std::make_unique<HttpLlmClient>(http_config(cfg.providers.llm, cfg.extraction.retries),
                                         transport(cfg.providers.llm.endpoint));
}

inline std::unique_ptr<Embedder> make_embedder(const PipelineConfig& cfg, bool force_mock,
                                               const TransportFactory& transport = {}) {
  if (force_mock || cfg.providers.embedder.kind == "mock") {
    return std::make_unique<HashingEmbedder>(cfg.providers.dimension);
  }
  if (!transport) throw Error(ErrorKind::ConfigError, "no HTTP transport available for the embedder");
  return std::make_unique<HttpEmbedder>(http_config(cfg.providers.embedder, cfg.extraction.retries),
                                        cfg.providers.dimension, transport(cfg.providers.embedder.endpoint));
}

// ---------------------------------------------------------------------------
// ingest: articles.jsonl -> chunks.jsonl

struct IngestSummary {
  std::size_t articles = 0;
  std::size_t chunks = 0;
  std::size_t kept = 0;

  nlohmann::json to_json() const { return {{"articles", articles}, {"chunks", chunks}, {"kept", kept}}; }
};

inline std::vector<Chunk> ingest_articles(const std::vector<nlohmann::json>& records, const PipelineConfig& cfg,
                                          const SentenceSegmenter& segmenter, IngestSummary* summary = nullptr) {
  std::vector<Chunk> chunks;
  for (const auto& r : records) {
    const Article a = parse_article(r, segmenter);
    auto cs = chunk_article(a, cfg.chunking.m, cfg.chunking.stride);
    chunks.insert(chunks.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
  }
  auto kept = dedup_chunks(chunks, DedupOptions{cfg.dedup.threshold, cfg.dedup.window_days});
  if (summary) *summary = {records.size(), chunks.size(), kept.size()};
  return kept;
}

inline IngestSummary run_ingest(const std::string& articles_path, const std::string& chunks_path,
                                const PipelineConfig& cfg, const std::optional<std::string>& abbreviations = {}) {
  const auto segmenter = abbreviations ? SentenceSegmenter::from_file(*abbreviations) : SentenceSegmenter();
  IngestSummary summary;
  const auto chunks = ingest_articles(parse_jsonl(text::read_file(articles_path)), cfg, segmenter, &summary);
  std::vector<nlohmann::json> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) out.push_back(to_json(c));
  text::write_file(chunks_path, dump_jsonl(out));
  return summary;
}

inline std::vector<Chunk> load_chunks(const std::string& path) {
  std::vector<Chunk> chunks;
  for (const auto& r : parse_jsonl(text::read_file(path))) chunks.push_back(chunk_from_json(r));
  return chunks;
}

// ---------------------------------------------------------------------------
// extract: chunks.jsonl -> graph.jsonl

inline std::set<std::string> extraction_subjects(const PipelineConfig& cfg, const std::vector<Chunk>& chunks) {
  std::set<std::string> subjects(cfg.extraction.subjects.begin(), cfg.extraction.subjects.end());
  if (subjects.empty()) {
    for (const auto& c : chunks) subjects.insert(c.entities.begin(), c.entities.end());
  }
  return subjects;
}

inline ExtractionRun extract_graph(const std::vector<Chunk>& chunks, Variant variant, const PipelineConfig& cfg,
                                   LlmClient& llm) {
  const auto names = entity_names(chunks);
  const auto subjects = extraction_subjects(cfg, chunks);
  const ExtractionOptions opts{cfg.generation(), cfg.extraction.parallelism};
  if (variant == Variant::SubjectCentric) return extract_m1(subjects, chunks, llm, names, opts);
  const auto pairs = select_target_pairs(chunks, subjects, cfg.extraction.top_p);
  return extract_m2(pairs, chunks, llm, cfg.extraction.k_batch, names, opts);
}

inline nlohmann::json run_extract(const std::string& chunks_path, const std::string& graph_path, Variant variant,
                                  const PipelineConfig& cfg, LlmClient& llm) {
  const auto chunks = load_chunks(chunks_path);
  if (chunks.empty()) throw Error(ErrorKind::EmptyCorpus, chunks_path + " holds no chunks");
  const auto run = extract_graph(chunks, variant, cfg, llm);
  text::write_file(graph_path, graph_to_jsonl(run.graph));
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : run.failures) {
    failures.push_back({{"subject", f.subject},
                        {"object", f.object ? nlohmann::json(*f.object) : nlohmann::json()},
                        {"chunks", f.chunks},
                        {"message", f.message}});
  }
  return {{"variant", std::string(to_string(variant))}, {"metrics", run.metrics.to_json()}, {"failures", failures}};
}

// ---------------------------------------------------------------------------
// index: graph.jsonl or chunks.jsonl -> datastore directory

enum class IndexKind { Graph, Chunks };

inline nlohmann::json run_index(const std::string& input_path, IndexKind kind, const std::string& store_dir,
                                Embedder& embedder) {
  std::vector<Document> docs;
  if (kind == IndexKind::Graph) {
    docs = documents_from(graph_from_jsonl(text::read_file(input_path)));
  } else {
    docs = documents_from(load_chunks(input_path));
  }
  const auto store = index(docs, embedder);
  save(store, store_dir);
  return {{"documents", docs.size()}, {"indexed", store.size()}, {"skipped", store.skipped()},
          {"dimension", store.dimension()}};
}

// ---------------------------------------------------------------------------
// query: queries.jsonl + datastore -> answers.jsonl

struct QueryRequest {
  std::string query;
  DateStamp date;
};

/// {"query": "...", "date": "YYYYMMDD"} per line; `date_override` replaces
/// every date when given.
inline std::vector<QueryRequest> load_queries(const std::string& path, std::optional<DateStamp> date_override = {}) {
  std::vector<QueryRequest> out;
  for (const auto& r : parse_jsonl(text::read_file(path))) {
    QueryRequest q;
    try {
      q.query = r.at("query").get<std::string>();
      if (date_override) {
        q.date = *date_override;
      } else {
        q.date = DateStamp::parse(r.at("date").get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MissingInput, std::string("malformed query record: ") + e.what());
    }
    out.push_back(std::move(q));
  }
  return out;
}

inline std::vector<nlohmann::json> answer_queries(const std::vector<QueryRequest>& queries, const Datastore& store,
                                                  Embedder& embedder, LlmClient& llm, const AnswerOptions& opts,
                                                  const std::string& method, const EntityLinker* linker = nullptr) {
  std::vector<nlohmann::json> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    const auto resp = answer(reformulate(q.query, q.date, linker), store, embedder, llm, opts);
    out.push_back(to_json(resp, method));
  }
  return out;
}

inline nlohmann::json run_query(const std::string& queries_path, const std::string& store_dir,
                                const std::string& answers_path, const AnswerOptions& opts, const std::string& method,
                                Embedder& embedder, LlmClient& llm, std::optional<DateStamp> date_override = {},
                                const std::optional<std::string>& entities_path = {}) {
  const auto store = load(store_dir, embedder.dimension());
  std::optional<DictionaryLinker> linker;
  if (entities_path) {
    try {
      linker = DictionaryLinker::from_json(nlohmann::json::parse(text::read_file(*entities_path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::MissingInput, *entities_path + " is not valid JSON: " + e.what());
    }
  }
  const auto answers = answer_queries(load_queries(queries_path, date_override), store, embedder, llm, opts, method,
                                      linker ? &*linker : nullptr);
  text::write_file(answers_path, dump_jsonl(answers));
  return {{"queries", answers.size()}, {"store_size", store.size()}};
}

// ---------------------------------------------------------------------------
// eval: answers.jsonl -> judgments.jsonl, report.json, report.txt, lengths.json

struct EvalArtifacts {
  std::vector<JudgeRecord> records;
  EvalReport report;
  std::vector<LengthCell> lengths;
};

inline EvalArtifacts evaluate_answers(const std::vector<AnswerRecord>& answers, const PipelineConfig& cfg,
                                      const std::vector<Attribute>& attributes, JudgeMode mode, LlmClient& llm) {
  JudgeOptions opts;
  opts.mode = mode;
  opts.attributes = attributes;
  opts.params = cfg.generation();
  opts.parallelism = cfg.eval.parallelism;
  if (mode == JudgeMode::FewShot) opts.examples = load_judge_examples(cfg.eval.examples_dir);
  EvalArtifacts a;
  a.records = judge_responses(answers, llm, opts);
  a.report = aggregate(a.records, cfg.eval.flagged);
  a.lengths = length_stats(a.records);
  return a;
}

inline nlohmann::json run_eval(const std::string& answers_path, const std::string& out_dir, const PipelineConfig& cfg,
                               const std::vector<Attribute>& attributes, JudgeMode mode, LlmClient& llm) {
  std::vector<AnswerRecord> answers;
  for (const auto& r : parse_jsonl(text::read_file(answers_path))) answers.push_back(answer_record_from_json(r));
  const auto a = evaluate_answers(answers, cfg, attributes, mode, llm);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir + ": " + ec.message());
  const std::filesystem::path dir(out_dir);
  std::vector<nlohmann::json> judged;
  for (const auto& r : a.records) judged.push_back(to_json(r));
  text::write_file((dir / "judgments.jsonl").string(), dump_jsonl(judged));
  text::write_file((dir / "report.json").string(), a.report.to_json().dump(2) + "\n");
  text::write_file((dir / "report.txt").string(), a.report.to_text());
  text::write_file((dir / "lengths.json").string(), to_json(a.lengths).dump(2) + "\n");
  return a.report.to_json();
}

// ---------------------------------------------------------------------------
// spikes: query log -> {entity: [dates]}. Entities whose series is shorter
// than the window are left out.

inline nlohmann::json detect_log_spikes(const std::vector<LoggedQuery>& log, const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<DateStamp>>> found;
  for (const auto& series : build_series(privacy_filter(log, cfg.querylog.min_users))) {
    if (series.points.size() < cfg.querylog.window) continue;  // too short to roll a full window over
    found.emplace_back(series.entity, detect_spikes(series, cfg.querylog.window));
  }
  return spikes_to_json(found);
}

inline nlohmann::json run_spikes(const std::string& log_path, const std::string& out_path, const PipelineConfig& cfg) {
  const auto result = detect_log_spikes(load_querylog(log_path), cfg);
  text::write_file(out_path, result.dump(2) + "\n");
  return result;
}

}  // namespace newsei
