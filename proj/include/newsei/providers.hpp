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
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsei/error.hpp"
#include "newsei/text.hpp"

namespace newsei {

using Vector = std::vector<double>;

struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 1024;
};

/// Text completion. Implementations must tolerate concurrent callers.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt, const GenerationParams& params) = 0;
  virtual std::string model_id() const = 0;
};

/// Fixed-dimension text embedding. Implementations must tolerate concurrent
/// callers and be deterministic.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Vector embed(std::string_view text) = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string model_id() const = 0;
};

enum class ProviderErrorCode { Auth, RateLimited, Timeout, MalformedResponse, Http, Unavailable };

constexpr std::string_view to_string(ProviderErrorCode code) noexcept {
  switch (code) {
    case ProviderErrorCode::Auth: return "AuthError";
    case ProviderErrorCode::RateLimited: return "RateLimited";
    case ProviderErrorCode::Timeout: return "Timeout";
    case ProviderErrorCode::MalformedResponse: return "MalformedResponse";
    case ProviderErrorCode::Http: return "HttpError";
    case ProviderErrorCode::Unavailable: return "Unavailable";
  }
  return "Unknown";
}

class ProviderError : public Error {
 public:
  ProviderError(ProviderErrorCode code, const std::string& message)
      : Error(ErrorKind::ProviderFailure, std::string(to_string(code)) + ": " + message), code_(code) {}

  ProviderErrorCode code() const noexcept { return code_; }

  bool retryable() const noexcept {
    return code_ == ProviderErrorCode::RateLimited || code_ == ProviderErrorCode::Timeout ||
           code_ == ProviderErrorCode::Http;
  }

 private:
  ProviderErrorCode code_;
};

/// Stable key for a prompt in scripts and cassettes.
inline std::string prompt_hash(std::string_view prompt) { return text::hex64(text::fnv1a64(prompt)); }

// ---------------------------------------------------------------------------
// Mock embedder

/// Hashed bag of words: each lowercased alphanumeric token lands in one of
/// `dimension` buckets; counts are L2-normalized. Empty text gives zeros.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 64) : dimension_(dimension) {
    if (dimension_ == 0) throw Error(ErrorKind::ConfigError, "embedding dimension must be positive");
  }

  static std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      const bool word = text::is_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
      if (word) {
        cur.push_back(text::lower(c));
      } else if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  Vector embed(std::string_view s) override {
    Vector v(dimension_, 0.0);
    for (const auto& tok : tokens(s)) v[text::fnv1a64(tok) % dimension_] += 1.0;
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq > 0.0) {
      const double norm = std::sqrt(sq);
      for (double& x : v) x /= norm;
    }
    return v;
  }

  std::size_t dimension() const override { return dimension_; }
  std::string model_id() const override { return "hashing-bow-" + std::to_string(dimension_); }

 private:
  std::size_t dimension_;
};

// ---------------------------------------------------------------------------
// Mock LLMs

/// Responds from a prompt-hash -> response script. Unscripted prompts get
/// `fallback` when set, otherwise a ProviderError. Prompts listed in
/// `fail_on` always fail.
class ScriptedLlm final : public LlmClient {
 public:
  ScriptedLlm() = default;
  explicit ScriptedLlm(std::optional<std::string> fallback) : fallback_(std::move(fallback)) {}

  void script(std::string_view prompt, std::string response) {
    std::lock_guard lock(mutex_);
    script_[prompt_hash(prompt)] = std::move(response);
  }
  void fail_on(std::string_view prompt) {
    std::lock_guard lock(mutex_);
    failing_.insert(prompt_hash(prompt));
  }

  std::string complete(const std::string& prompt, const GenerationParams&) override {
    calls_.fetch_add(1);
    const std::string key = prompt_hash(prompt);
    std::lock_guard lock(mutex_);
    if (failing_.count(key)) throw ProviderError(ProviderErrorCode::Unavailable, "scripted failure");
    if (auto it = script_.find(key); it != script_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw ProviderError(ProviderErrorCode::Unavailable, "no scripted response for prompt " + key);
  }

  std::string model_id() const override { return "scripted-mock"; }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::mutex mutex_;
  std::unordered_map<std::string, std::string> script_;
  std::unordered_set<std::string> failing_;
  std::optional<std::string> fallback_;
  std::atomic<std::size_t> calls_{0};
};

/// Wraps a callable; handy for mocks whose answer is computed from the prompt.
class FunctionLlm final : public LlmClient {
 public:
  using Fn = std::function<std::string(const std::string&)>;
  explicit FunctionLlm(Fn fn, std::string id = "function-mock") : fn_(std::move(fn)), id_(std::move(id)) {}

  std::string complete(const std::string& prompt, const GenerationParams&) override {
    calls_.fetch_add(1);
    return fn_(prompt);
  }
  std::string model_id() const override { return id_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::string id_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Record / replay

/// JSON-lines file of {"prompt_hash", "response"} records.
class Cassette {
 public:
  Cassette() = default;

  static Cassette load(const std::string& path) {
    Cassette c;
    const std::string content = text::read_file(path);
    for (const auto& line : text::split_lines(content)) {
      if (text::trim(line).empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        c.put_hash(j.at("prompt_hash").get<std::string>(), j.at("response").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::IoError, std::string("bad cassette record: ") + e.what());
      }
    }
    return c;
  }

  void save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& key : order_) {
      out += nlohmann::json{{"prompt_hash", key}, {"response", entries_.at(key)}}.dump();
      out += '\n';
    }
    text::write_file(path, out);
  }

  void put(std::string_view prompt, std::string response) { put_hash(prompt_hash(prompt), std::move(response)); }

  std::optional<std::string> find(std::string_view prompt) const {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(prompt_hash(prompt)); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  Cassette(Cassette&& other) noexcept : entries_(std::move(other.entries_)), order_(std::move(other.order_)) {}

 private:
  void put_hash(std::string key, std::string response) {
    std::lock_guard lock(mutex_);
    if (!entries_.count(key)) order_.push_back(key);
    entries_[std::move(key)] = std::move(response);
  }

  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::vector<std::string> order_;
};

class ReplayLlm final : public LlmClient {
 public:
  explicit ReplayLlm(std::shared_ptr<const Cassette> cassette) : cassette_(std::move(cassette)) {}

  std::string complete(const std::string& prompt, const GenerationParams&) override {
    if (auto r = cassette_->find(prompt)) return *r;
    throw ProviderError(ProviderErrorCode::Unavailable, "prompt not recorded: " + prompt_hash(prompt));
  }
  std::string model_id() const override { return "replay"; }

 private:
  std::shared_ptr<const Cassette> cassette_;
};

/// Forwards to `inner` and records every successful exchange.
class RecordingLlm final : public LlmClient {
 public:
  RecordingLlm(std::shared_ptr<LlmClient> inner, std::shared_ptr<Cassette> cassette)
      : inner_(std::move(inner)), cassette_(std::move(cassette)) {}

  std::string complete(const std::string& prompt, const GenerationParams& params) override {
    std::string response = inner_->complete(prompt, params);
    cassette_->put(prompt, response);
    return response;
  }
  std::string model_id() const override { return inner_->model_id(); }

 private:
  std::shared_ptr<LlmClient> inner_;
  std::shared_ptr<Cassette> cassette_;
};

// ---------------------------------------------------------------------------
// HTTP-backed providers

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
};

/// Token bucket shared by concurrent callers. A rate of 0 disables limiting.
class TokenBucket {
 public:
  explicit TokenBucket(double per_second = 0.0, double burst = 1.0)
      : rate_(per_second), capacity_(std::max(1.0, burst)), tokens_(capacity_),
        last_(std::chrono::steady_clock::now()) {}

  void acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
  enum class Outcome { Ok, Timeout, ConnectionError };
  Outcome outcome = Outcome::Ok;
  int status = 0;
  std::string body;
};

/// The network boundary. The production implementation lives in
/// http_transport.hpp; tests inject fakes.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

struct HttpProviderConfig {
  std::string endpoint;
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  double requests_per_second = 0.0;
};

namespace detail {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> getenv_lookup(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
  return std::nullopt;
}

/// Shared POST-with-retry logic for the HTTP providers.
class HttpCaller {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpCaller(HttpProviderConfig config, std::shared_ptr<HttpTransport> transport, EnvLookup env)
      : config_(std::move(config)), transport_(std::move(transport)),
        bucket_(config_.requests_per_second), api_key_(env(config_.api_key_env)),
        sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

  void set_sleeper(Sleeper s) { sleep_ = std::move(s); }
  const HttpProviderConfig& config() const { return config_; }
  std::size_t retries() const { return retries_.load(); }

  nlohmann::json post_json(const nlohmann::json& payload) {
    if (!api_key_) {
      throw ProviderError(ProviderErrorCode::Auth, "credential variable " + config_.api_key_env + " is not set");
    }
    HttpRequest req{config_.endpoint,
                    {{"Authorization", "Bearer " + *api_key_}, {"Content-Type", "application/json"}},
                    payload.dump(),
                    config_.timeout};
    const int attempts = std::max(1, config_.retry.max_attempts);
    auto backoff = config_.retry.initial_backoff;
    for (int attempt = 1;; ++attempt) {
      try {
        return once(req);
      } catch (const ProviderError& e) {
        if (!e.retryable() || attempt >= attempts) throw;
        retries_.fetch_add(1);
        sleep_(backoff);
        backoff = std::min(config_.retry.max_backoff,
                           std::chrono::milliseconds(static_cast<long long>(
                               static_cast<double>(backoff.count()) * config_.retry.multiplier)));
      }
    }
  }

 private:
  nlohmann::json once(const HttpRequest& req) {
    bucket_.acquire();
    const HttpResponse resp = transport_->post(req);
    switch (resp.outcome) {
      case HttpResponse::Outcome::Timeout:
        throw ProviderError(ProviderErrorCode::Timeout, "request to " + req.url + " timed out");
      case HttpResponse::Outcome::ConnectionError:
        throw ProviderError(ProviderErrorCode::Http, "connection to " + req.url + " failed");
      case HttpResponse::Outcome::Ok:
        break;
    }
    if (resp.status == 401 || resp.status == 403) {
      throw ProviderError(ProviderErrorCode::Auth, "HTTP " + std::to_string(resp.status));
    }
    if (resp.status == 429) throw ProviderError(ProviderErrorCode::RateLimited, "HTTP 429");
    if (resp.status >= 500) throw ProviderError(ProviderErrorCode::Http, "HTTP " + std::to_string(resp.status));
    if (resp.status < 200 || resp.status >= 300) {
      // Other 4xx responses will not improve on retry.
      throw ProviderError(ProviderErrorCode::MalformedResponse, "HTTP " + std::to_string(resp.status) + ": " + resp.body);
    }
    try {
      return nlohmann::json::parse(resp.body);
    } catch (const nlohmann::json::parse_error&) {
      throw ProviderError(ProviderErrorCode::MalformedResponse, "response body is not JSON");
    }
  }

  HttpProviderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  TokenBucket bucket_;
  std::optional<std::string> api_key_;
  Sleeper sleep_;
  std::atomic<std::size_t> retries_{0};
};

}  // namespace detail

/// Chat-completions style endpoint: POSTs {"model","messages","temperature",
/// "max_tokens"} and reads choices[0].message.content.
class HttpLlmClient final : public LlmClient {
 public:
  HttpLlmClient(HttpProviderConfig config, std::shared_ptr<HttpTransport> transport,
                detail::EnvLookup env = detail::getenv_lookup)
      : caller_(std::move(config), std::move(transport), std::move(env)) {}

  std::string complete(const std::string& prompt, const GenerationParams& params) override {
    const nlohmann::json payload = {
        {"model", caller_.config().model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", params.temperature},
        {"max_tokens", params.max_tokens}};
    const auto body = caller_.post_json(payload);
    const auto* content = find_content(body);
    if (!content) throw ProviderError(ProviderErrorCode::MalformedResponse, "no choices[0].message.content");
    return content->get<std::string>();
  }

  std::string model_id() const override { return caller_.config().model; }
  std::size_t retry_count() const { return caller_.retries(); }
  void set_sleeper(detail::HttpCaller::Sleeper s) { caller_.set_sleeper(std::move(s)); }

 private:
  static const nlohmann::json* find_content(const nlohmann::json& body) {
    if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
      return nullptr;
    }
    const auto& first = body["choices"][0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) return nullptr;
    const auto& msg = first["message"];
    if (!msg.contains("content") || !msg["content"].is_string()) return nullptr;
    return &msg["content"];
  }

  detail::HttpCaller caller_;
};

/// Embeddings endpoint: POSTs {"model","input"} and reads data[0].embedding.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(HttpProviderConfig config, std::size_t dimension, std::shared_ptr<HttpTransport> transport,
               detail::EnvLookup env = detail::getenv_lookup)
      : caller_(std::move(config), std::move(transport), std::move(env)), dimension_(dimension) {}

  Vector embed(std::string_view s) override {
    const auto body = caller_.post_json({{"model", caller_.config().model}, {"input", std::string(s)}});
    try {
      auto v = body.at("data").at(0).at("embedding").get<Vector>();
      if (v.size() != dimension_) {
        throw Error(ErrorKind::DimensionMismatch, "embedding has " + std::to_string(v.size()) +
                                                      " components, expected " + std::to_string(dimension_));
      }
      return v;
    } catch (const nlohmann::json::exception&) {
      throw ProviderError(ProviderErrorCode::MalformedResponse, "no data[0].embedding");
    }
  }

  std::size_t dimension() const override { return dimension_; }
  std::string model_id() const override { return caller_.config().model; }

 private:
  detail::HttpCaller caller_;
  std::size_t dimension_;
};

}  // namespace newsei
