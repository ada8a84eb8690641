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

#include <gtest/gtest.h>

#include <deque>

#include "support.hpp"

namespace {

using namespace newsei;
using namespace testing_support;

TEST(HashingEmbedder, DeterministicAndNormalized) {
  HashingEmbedder e(32);
  const auto a = e.embed("Doja Cat performs at the VMAs");
  EXPECT_EQ(a, e.embed("doja cat, performs at the VMAs!"));
  ASSERT_EQ(a.size(), 32u);
  double sq = 0;
  for (double x : a) sq += x * x;
  EXPECT_NEAR(sq, 1.0, 1e-12);
  const auto zero = e.embed("  ,,, ");
  EXPECT_TRUE(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));
  EXPECT_THROW(HashingEmbedder(0), Error);
}

TEST(HashingEmbedder, SharedWordsRaiseSimilarity) {
  HashingEmbedder e;
  const auto q = e.embed("harbor city council vote");
  EXPECT_GT(cosine(q, e.embed("the harbor city council held a vote")), cosine(q, e.embed("festival music lineup")));
}

TEST(Cassette, RecordThenReplay) {
  const auto dir = scratch_dir("cassette");
  auto cassette = std::make_shared<Cassette>();
  auto inner = std::make_shared<FunctionLlm>([](const std::string& p) { return "echo:" + p; });
  RecordingLlm rec(inner, cassette);
  EXPECT_EQ(rec.complete("one", {}), "echo:one");
  EXPECT_EQ(rec.complete("two", {}), "echo:two");
  EXPECT_EQ(rec.complete("one", {}), "echo:one");
  EXPECT_EQ(cassette->size(), 2u);
  const auto path = dir + "/c.jsonl";
  cassette->save(path);

  ReplayLlm replay(std::make_shared<const Cassette>(Cassette::load(path)));
  EXPECT_EQ(replay.complete("two", {}), "echo:two");
  try {
    replay.complete("three", {});
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.code(), ProviderErrorCode::Unavailable);
    EXPECT_EQ(e.kind(), ErrorKind::ProviderFailure);
  }
}

TEST(ScriptedLlm, ScriptFallbackAndFailures) {
  ScriptedLlm strict;
  strict.script("a", "A");
  EXPECT_EQ(strict.complete("a", {}), "A");
  EXPECT_THROW(strict.complete("b", {}), ProviderError);
  ScriptedLlm loose(std::string("x"));
  loose.fail_on("bad");
  EXPECT_EQ(loose.complete("b", {}), "x");
  EXPECT_THROW(loose.complete("bad", {}), ProviderError);
  EXPECT_EQ(loose.calls(), 2u);
}

// Replays a queue of canned responses and records what was sent.
class FakeTransport final : public HttpTransport {
 public:
  explicit FakeTransport(std::deque<HttpResponse> responses) : responses_(std::move(responses)) {}
  HttpResponse post(const HttpRequest& request) override {
    requests.push_back(request);
    if (responses_.empty()) return {HttpResponse::Outcome::ConnectionError, 0, ""};
    auto r = responses_.front();
    responses_.pop_front();
    return r;
  }
  std::vector<HttpRequest> requests;

 private:
  std::deque<HttpResponse> responses_;
};

HttpResponse ok_chat(const std::string& content) {
  nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return {HttpResponse::Outcome::Ok, 200, body.dump()};
}

detail::EnvLookup with_key(std::optional<std::string> key) {
  return [key](const std::string& name) { return name == "LLM_API_KEY" ? key : std::nullopt; };
}

HttpProviderConfig test_config() {
  HttpProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/v1/chat/completions";
  cfg.model = "test-model";
  cfg.retry.max_attempts = 3;
  return cfg;
}

TEST(HttpLlmClient, SendsPayloadAndReadsContent) {
  auto transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{ok_chat("hello")});
  HttpLlmClient client(test_config(), transport, with_key("sk-test"));
  EXPECT_EQ(client.complete("prompt text", {0.0, 77}), "hello");
  ASSERT_EQ(transport->requests.size(), 1u);
  const auto& req = transport->requests[0];
  const auto body = nlohmann::json::parse(req.body);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["content"], "prompt text");
  EXPECT_EQ(body["max_tokens"], 77);
  EXPECT_NE(std::find(req.headers.begin(), req.headers.end(),
                      std::pair<std::string, std::string>{"Authorization", "Bearer sk-test"}),
            req.headers.end());
}

TEST(HttpLlmClient, RetriesTransientFailuresWithBackoff) {
  auto transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{
      {HttpResponse::Outcome::Ok, 429, ""}, {HttpResponse::Outcome::Timeout, 0, ""}, ok_chat("done")});
  HttpLlmClient client(test_config(), transport, with_key("k"));
  std::vector<long long> sleeps;
  client.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  EXPECT_EQ(client.complete("p", {}), "done");
  EXPECT_EQ(client.retry_count(), 2u);
  EXPECT_EQ(sleeps, (std::vector<long long>{500, 1000}));
}

TEST(HttpLlmClient, GivesUpAfterMaxAttempts) {
  auto transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{
      {HttpResponse::Outcome::Ok, 503, ""}, {HttpResponse::Outcome::Ok, 503, ""}, {HttpResponse::Outcome::Ok, 503, ""},
      ok_chat("never")});
  HttpLlmClient client(test_config(), transport, with_key("k"));
  client.set_sleeper([](std::chrono::milliseconds) {});
  try {
    client.complete("p", {});
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.code(), ProviderErrorCode::Http);
  }
  EXPECT_EQ(transport->requests.size(), 3u);
}

TEST(HttpLlmClient, StatusMappingAndNoRetryOnPermanentErrors) {
  struct Case {
    HttpResponse response;
    ProviderErrorCode code;
  };
  const std::vector<Case> cases = {
      {{HttpResponse::Outcome::Ok, 401, ""}, ProviderErrorCode::Auth},
      {{HttpResponse::Outcome::Ok, 403, ""}, ProviderErrorCode::Auth},
      {{HttpResponse::Outcome::Ok, 400, "bad"}, ProviderErrorCode::MalformedResponse},
      {{HttpResponse::Outcome::Ok, 200, "not json"}, ProviderErrorCode::MalformedResponse},
      {{HttpResponse::Outcome::Ok, 200, "{\"choices\":[]}"}, ProviderErrorCode::MalformedResponse},
  };
  for (const auto& c : cases) {
    auto transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{c.response, ok_chat("x")});
    HttpLlmClient client(test_config(), transport, with_key("k"));
    try {
      client.complete("p", {});
      ADD_FAILURE() << "status " << c.response.status;
    } catch (const ProviderError& e) {
      EXPECT_EQ(e.code(), c.code) << c.response.status;
    }
    EXPECT_EQ(transport->requests.size(), 1u);
  }
}

TEST(HttpLlmClient, MissingCredentialFailsBeforeAnyRequest) {
  auto transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{ok_chat("x")});
  HttpLlmClient client(test_config(), transport, with_key(std::nullopt));
  try {
    client.complete("p", {});
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.code(), ProviderErrorCode::Auth);
    EXPECT_NE(std::string(e.what()).find("LLM_API_KEY"), std::string::npos);
  }
  EXPECT_TRUE(transport->requests.empty());
}

TEST(HttpEmbedder, ReadsVectorAndChecksDimension) {
  const nlohmann::json body = {{"data", {{{"embedding", {0.6, 0.8}}}}}};
  auto transport = std::make_shared<FakeTransport>(
      std::deque<HttpResponse>{{HttpResponse::Outcome::Ok, 200, body.dump()}, {HttpResponse::Outcome::Ok, 200, body.dump()}});
  HttpEmbedder two(test_config(), 2, transport, with_key("k"));
  EXPECT_EQ(two.embed("x"), (Vector{0.6, 0.8}));
  HttpEmbedder three(test_config(), 3, transport, with_key("k"));
  try {
    three.embed("x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

}  // namespace
