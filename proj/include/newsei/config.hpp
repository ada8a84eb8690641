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

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/error.hpp"
#include "newsei/eval.hpp"
#include "newsei/graph.hpp"
#include "newsei/qa.hpp"
#include "newsei/text.hpp"

namespace newsei {

struct ProviderSettings {
  std::string kind = "mock";  // mock | http
  std::string endpoint;
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  long timeout_ms = 60000;
  double requests_per_second = 0.0;
};

struct PipelineConfig {
  struct Chunking {
    std::size_t m = 5;
    std::size_t stride = 3;
  } chunking;
  struct Dedup {
    double threshold = 0.8;
    std::optional<long> window_days;
  } dedup;
  struct Extraction {
    Variant variant = Variant::PairCentric;
    std::size_t k_batch = 4;
    std::size_t top_p = 20;
    int retries = 3;  // attempts per HTTP request, first one included
    std::size_t parallelism = 1;
    std::vector<std::string> subjects;  // empty: every entity in the chunks
  } extraction;
  struct Retrieval {
    Strategy strategy = Strategy::Temporal;
    std::size_t k = 10;
    long r = 3;
  } retrieval;
  struct Providers {
    ProviderSettings llm;
    ProviderSettings embedder;
    std::size_t dimension = 64;
    double temperature = 0.0;
    int max_tokens = 1024;
  } providers;
  struct Eval {
    JudgeMode mode = JudgeMode::ZeroShot;
    std::string examples_dir = "judge_examples";
    FlaggedPolicy flagged = FlaggedPolicy::Exclude;
    std::string attributes = "all";
    std::size_t parallelism = 1;
  } eval;
  struct QueryLog {
    std::int64_t min_users = 5;
    std::size_t window = 3;
  } querylog;

  GenerationParams generation() const { return {providers.temperature, providers.max_tokens}; }

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
    if (chunking.m < 1) fail("chunking.m must be >= 1");
    if (chunking.stride < 1) fail("chunking.stride must be >= 1");
    if (chunking.stride > chunking.m) fail("chunking.stride must not exceed chunking.m");
    if (!(dedup.threshold >= 0.0 && dedup.threshold <= 1.0)) fail("dedup.threshold must lie in [0, 1]");
    if (dedup.window_days && *dedup.window_days < 0) fail("dedup.window_days must be >= 0");
    if (extraction.k_batch < 1) fail("extraction.k_batch must be >= 1");
    if (extraction.top_p < 1) fail("extraction.top_p must be >= 1");
    if (extraction.retries < 1 || extraction.retries > 10) fail("extraction.retries must lie in [1, 10]");
    if (extraction.parallelism < 1 || extraction.parallelism > 64) fail("extraction.parallelism must lie in [1, 64]");
    if (retrieval.k < 1) fail("retrieval.k must be >= 1");
    if (retrieval.r < 0) fail("retrieval.r must be >= 0");
    if (providers.dimension < 1) fail("providers.embedder.dimension must be >= 1");
    if (providers.temperature < 0.0 || providers.temperature > 2.0) fail("providers.llm.temperature must lie in [0, 2]");
    if (providers.max_tokens < 1) fail("providers.llm.max_tokens must be >= 1");
    for (const auto* p : {&providers.llm, &providers.embedder}) {
      if (p->kind != "mock" && p->kind != "http") fail("provider kind must be mock or http");
      if (p->kind == "http" && (p->endpoint.empty() || p->model.empty())) fail("http providers need endpoint and model");
      if (p->timeout_ms < 1) fail("provider timeout_ms must be >= 1");
      if (p->requests_per_second < 0.0) fail("provider requests_per_second must be >= 0");
    }
    if (eval.parallelism < 1 || eval.parallelism > 64) fail("eval.parallelism must lie in [1, 64]");
    attributes_from_string(eval.attributes);
    if (querylog.min_users < 1) fail("querylog.min_users must be >= 1");
    if (querylog.window < 1) fail("querylog.window must be >= 1");
  }
};

namespace config_detail {

inline void only_keys(const nlohmann::json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, std::string(section) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || k == key;
    if (!known) throw Error(ErrorKind::ConfigError, "unknown config key " + std::string(section) + "." + key);
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::ConfigError, std::string("config key '") + key + "' has the wrong type");
  }
}

inline void read_count(const nlohmann::json& j, const char* key, std::size_t& into) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorKind::ConfigError, std::string("config key '") + key + "' must be a non-negative integer");
  }
  into = v.get<std::size_t>();
}

inline void read_provider(const nlohmann::json& j, ProviderSettings& p) {
  read(j, "kind", p.kind);
  read(j, "endpoint", p.endpoint);
  read(j, "model", p.model);
  read(j, "api_key_env", p.api_key_env);
  read(j, "timeout_ms", p.timeout_ms);
  read(j, "requests_per_second", p.requests_per_second);
}

}  // namespace config_detail

/// Parses and validates. Unknown keys anywhere are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  using namespace config_detail;
  PipelineConfig c;
  only_keys(j, "config", {"chunking", "dedup", "extraction", "retrieval", "providers", "eval", "querylog"});
  if (j.contains("chunking")) {
    const auto& s = j["chunking"];
    only_keys(s, "chunking", {"m", "stride"});
    read_count(s, "m", c.chunking.m);
    read_count(s, "stride", c.chunking.stride);
  }
  if (j.contains("dedup")) {
    const auto& s = j["dedup"];
    only_keys(s, "dedup", {"threshold", "window_days"});
    read(s, "threshold", c.dedup.threshold);
    if (s.contains("window_days") && !s["window_days"].is_null()) {
      long w = 0;
      read(s, "window_days", w);
      c.dedup.window_days = w;
    }
  }
  if (j.contains("extraction")) {
    const auto& s = j["extraction"];
    only_keys(s, "extraction", {"variant", "k_batch", "top_p", "retries", "parallelism", "subjects"});
    if (s.contains("variant")) {
      std::string v;
      read(s, "variant", v);
      try {
        c.extraction.variant = variant_from_string(v);
      } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
      }
    }
    read_count(s, "k_batch", c.extraction.k_batch);
    read_count(s, "top_p", c.extraction.top_p);
    read(s, "retries", c.extraction.retries);
    read_count(s, "parallelism", c.extraction.parallelism);
    read(s, "subjects", c.extraction.subjects);
  }
  if (j.contains("retrieval")) {
    const auto& s = j["retrieval"];
    only_keys(s, "retrieval", {"strategy", "k", "r"});
    if (s.contains("strategy")) {
      std::string v;
      read(s, "strategy", v);
      c.retrieval.strategy = strategy_from_string(v);
    }
    read_count(s, "k", c.retrieval.k);
    read(s, "r", c.retrieval.r);
  }
  if (j.contains("providers")) {
    const auto& s = j["providers"];
    only_keys(s, "providers", {"llm", "embedder"});
    if (s.contains("llm")) {
      const auto& l = s["llm"];
      only_keys(l, "providers.llm", {"kind", "endpoint", "model", "api_key_env", "timeout_ms", "requests_per_second",
                                     "temperature", "max_tokens"});
      read_provider(l, c.providers.llm);
      read(l, "temperature", c.providers.temperature);
      read(l, "max_tokens", c.providers.max_tokens);
    }
    if (s.contains("embedder")) {
      const auto& e = s["embedder"];
      only_keys(e, "providers.embedder",
                {"kind", "endpoint", "model", "api_key_env", "timeout_ms", "requests_per_second", "dimension"});
      read_provider(e, c.providers.embedder);
      read_count(e, "dimension", c.providers.dimension);
    }
  }
  if (j.contains("eval")) {
    const auto& s = j["eval"];
    only_keys(s, "eval", {"mode", "examples_dir", "flagged", "attributes", "parallelism"});
    if (s.contains("mode")) {
      std::string v;
      read(s, "mode", v);
      c.eval.mode = judge_mode_from_string(v);
    }
    read(s, "examples_dir", c.eval.examples_dir);
    if (s.contains("flagged")) {
      std::string v;
      read(s, "flagged", v);
      if (v == "exclude") {
        c.eval.flagged = FlaggedPolicy::Exclude;
      } else if (v == "clamp") {
        c.eval.flagged = FlaggedPolicy::Clamp;
      } else {
        throw Error(ErrorKind::ConfigError, "eval.flagged must be exclude or clamp");
      }
    }
    read(s, "attributes", c.eval.attributes);
    read_count(s, "parallelism", c.eval.parallelism);
  }
  if (j.contains("querylog")) {
    const auto& s = j["querylog"];
    only_keys(s, "querylog", {"min_users", "window"});
    read(s, "min_users", c.querylog.min_users);
    read_count(s, "window", c.querylog.window);
  }
  c.validate();
  return c;
}

/// Relative examples_dir is resolved against the config file's directory.
inline PipelineConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, "config " + path + " is not valid JSON: " + e.what());
  }
  auto c = config_from_json(j);
  const std::filesystem::path examples(c.eval.examples_dir);
  if (examples.is_relative()) {
    c.eval.examples_dir = (std::filesystem::path(path).parent_path() / examples).lexically_normal().string();
  }
  return c;
}

}  // namespace newsei
