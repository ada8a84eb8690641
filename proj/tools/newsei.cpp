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

#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "newsei/http_transport.hpp"
#include "newsei/newsei.hpp"

namespace {

int exit_code(newsei::ErrorKind kind) {
  switch (kind) {
    case newsei::ErrorKind::ConfigError: return 2;
    case newsei::ErrorKind::MissingInput: return 3;
    case newsei::ErrorKind::ProviderFailure: return 4;
    default: return 1;
  }
}

void report_error(const std::string& stage, const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"stage", stage}, {"error", kind}, {"message", message}}.dump() << "\n";
}

newsei::TransportFactory http_transport() {
  return [](const std::string&) { return std::make_shared<newsei::HttplibTransport>(); };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"News entity-interaction extraction and date-aware question answering"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool mock = false;
  app.add_option("--config", config_path, "Pipeline configuration (JSON)");
  app.add_flag("--mock-providers", mock, "Use the offline mock LLM and embedder");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "articles.jsonl -> deduplicated chunks.jsonl");
  std::string articles, chunks_out;
  std::optional<std::string> abbreviations;
  ingest->add_option("--articles", articles)->required();
  ingest->add_option("--out", chunks_out)->required();
  ingest->add_option("--abbreviations", abbreviations, "One abbreviation per line");

  // extract
  auto* extract = app.add_subcommand("extract", "chunks.jsonl -> interaction graph (graph.jsonl)");
  std::string chunks_in, graph_out;
  std::optional<std::string> variant;
  extract->add_option("--chunks", chunks_in)->required();
  extract->add_option("--out", graph_out)->required();
  extract->add_option("--variant", variant, "m1 (subject-centric) or m2 (pair-centric)")
      ->check(CLI::IsMember({"m1", "m2", "M1", "M2"}));

  // index
  auto* index = app.add_subcommand("index", "graph.jsonl or chunks.jsonl -> datastore directory");
  std::string index_in, store_out, kind = "graph";
  index->add_option("--input", index_in)->required();
  index->add_option("--out", store_out)->required();
  index->add_option("--kind", kind)->check(CLI::IsMember({"graph", "chunks"}));

  // query
  auto* query = app.add_subcommand("query", "queries.jsonl + datastore -> answers.jsonl");
  std::string queries_in, store_in, answers_out, method = "newsei";
  std::optional<std::string> date, strategy, entities;
  std::optional<std::size_t> k;
  std::optional<long> r;
  query->add_option("--queries", queries_in)->required();
  query->add_option("--store", store_in)->required();
  query->add_option("--out", answers_out)->required();
  query->add_option("--date", date, "Override every query date (YYYYMMDD)");
  query->add_option("--strategy", strategy)->check(CLI::IsMember({"temporal", "generic", "hybrid"}));
  query->add_option("--k", k);
  query->add_option("--r", r);
  query->add_option("--method", method, "Label recorded with each answer");
  query->add_option("--entities", entities, "Entity dictionary for query linking");

  // eval
  auto* eval = app.add_subcommand("eval", "answers.jsonl -> judgments and report");
  std::string answers_in, eval_out;
  std::optional<std::string> attribute, mode;
  eval->add_option("--answers", answers_in)->required();
  eval->add_option("--out-dir", eval_out)->required();
  eval->add_option("--attribute", attribute)->check(CLI::IsMember({"all", "h", "r", "f"}));
  eval->add_option("--mode", mode)->check(CLI::IsMember({"zero", "few"}));

  // spikes
  auto* spikes = app.add_subcommand("spikes", "query log -> spiking dates per entity");
  std::string log_in, spikes_out;
  std::optional<std::size_t> window;
  std::optional<std::int64_t> min_users;
  spikes->add_option("--log", log_in, "CSV or JSON-lines query log")->required();
  spikes->add_option("--out", spikes_out)->required();
  spikes->add_option("--window", window);
  spikes->add_option("--min-users", min_users);

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    newsei::PipelineConfig cfg = config_path.empty() ? newsei::PipelineConfig{} : newsei::load_config(config_path);
    if (variant) cfg.extraction.variant = newsei::variant_from_string(*variant);
    if (strategy) cfg.retrieval.strategy = newsei::strategy_from_string(*strategy);
    if (k) cfg.retrieval.k = *k;
    if (r) cfg.retrieval.r = *r;
    if (attribute) cfg.eval.attributes = *attribute;
    if (mode) cfg.eval.mode = newsei::judge_mode_from_string(*mode);
    if (window) cfg.querylog.window = *window;
    if (min_users) cfg.querylog.min_users = *min_users;
    cfg.validate();

    nlohmann::json summary;
    if (*ingest) {
      summary = newsei::run_ingest(articles, chunks_out, cfg, abbreviations).to_json();
    } else if (*extract) {
      auto llm = newsei::make_llm(cfg, mock, http_transport());
      summary = newsei::run_extract(chunks_in, graph_out, cfg.extraction.variant, cfg, *llm);
    } else if (*index) {
      auto embedder = newsei::make_embedder(cfg, mock, http_transport());
      summary = newsei::run_index(index_in, kind == "graph" ? newsei::IndexKind::Graph : newsei::IndexKind::Chunks,
                                  store_out, *embedder);
    } else if (*query) {
      auto llm = newsei::make_llm(cfg, mock, http_transport());
      auto embedder = newsei::make_embedder(cfg, mock, http_transport());
      newsei::AnswerOptions opts{cfg.retrieval.strategy, cfg.retrieval.k, cfg.retrieval.r, cfg.generation()};
      std::optional<newsei::DateStamp> override_date;
      if (date) override_date = newsei::DateStamp::parse(*date);
      summary = newsei::run_query(queries_in, store_in, answers_out, opts, method, *embedder, *llm, override_date,
                                  entities);
    } else if (*eval) {
      auto llm = newsei::make_llm(cfg, mock, http_transport());
      summary = newsei::run_eval(answers_in, eval_out, cfg, newsei::attributes_from_string(cfg.eval.attributes),
                                 cfg.eval.mode, *llm);
    } else if (*spikes) {
      summary = newsei::run_spikes(log_in, spikes_out, cfg);
    }
    std::cout << summary.dump() << "\n";
    return 0;
  } catch (const newsei::Error& e) {
    report_error(stage, std::string(newsei::to_string(e.kind())), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report_error(stage, "Internal", e.what());
    return 1;
  }
}
