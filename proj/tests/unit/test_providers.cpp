// Copyright 2026 The rbridge Authors.
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

#include "rbridge/providers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "fake_openai_server.hpp"
#include "rbridge/error.hpp"
#include "rbridge/trace_acquisition.hpp"
#include "test_util.hpp"

using namespace rbridge;
using rbridge::testing::FakeOpenAIServer;
using rbridge::testing::FakeServerOptions;
using rbridge::testing::TempDir;

namespace {

std::string joined(const std::vector<ProxyTokenNLL>& v) {
  std::string s;
  for (const auto& t : v) s += t.token_text;
  return s;
}

ProviderConfig remote_config(const std::string& endpoint) {
  ProviderConfig c;
  c.kind = ProviderKind::Remote;
  c.model_id = "fake-model";
  c.endpoint = endpoint;
  c.retries = 3;
  c.backoff_s = 0.01;
  c.timeout_s = 5;
  return c;
}

}  // namespace

TEST(MockProvider, DeterministicPerSeed) {
  auto a = mock_provider(7);
  auto b = mock_provider(7);
  auto c = mock_provider(8);
  const auto na = a->proxy_token_nlls("Q: x\n", "one two three");
  EXPECT_EQ(na, b->proxy_token_nlls("Q: x\n", "one two three"));
  EXPECT_NE(na, c->proxy_token_nlls("Q: x\n", "one two three"));
  EXPECT_EQ(joined(na), "one two three");
  ASSERT_EQ(na.size(), 3u);
  EXPECT_EQ(na[1].token_text, " two");
}

TEST(MockProvider, NllDependsOnContext) {
  auto p = mock_provider(3);
  EXPECT_NE(p->proxy_token_nlls("A", " word")[0].nll, p->proxy_token_nlls("B", " word")[0].nll);
}

TEST(MockProvider, SeedsDoNotCollide) {
  std::set<double> seen;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    seen.insert(mock_provider(seed)->proxy_token_nlls("ctx", "token")[0].nll);
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(MockProvider, UniformVocabulary) {
  MockBehavior b;
  b.uniform_vocab = 50000;
  auto p = mock_provider(1, b);
  for (const auto& t : p->proxy_token_nlls("c", "a b c d")) EXPECT_EQ(t.nll, std::log(50000.0));
}

TEST(MockProvider, ByteTokenization) {
  MockBehavior b;
  b.tokenization = MockTokenization::Byte;
  auto p = mock_provider(1, b);
  const auto v = p->proxy_token_nlls("c", "caf\xc3\xa9");
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(joined(v), "caf\xc3\xa9");
}

TEST(MockProvider, TotalNllMatchesPerTokenSum) {
  auto p = mock_provider(5);
  const std::string cont = "the quick brown fox jumps over the lazy dog";
  double sum = 0.0;
  for (const auto& t : p->proxy_token_nlls("ctx", cont)) sum += t.nll;
  const auto total = p->continuation_total_nll("ctx", cont);
  ASSERT_TRUE(total.has_value());
  EXPECT_NEAR(*total, sum, 1e-9);
}

TEST(MockProvider, EmptyContinuationMakesNoCall) {
  auto p = mock_provider(5);
  EXPECT_TRUE(p->proxy_token_nlls("ctx", "").empty());
  EXPECT_EQ(p->calls(), 0u);
}

TEST(MockProvider, FrontierTokensReproduceText) {
  auto p = mock_provider(9);
  const auto c = p->frontier_complete(build_prompt("math", "What is 1+1?"));
  std::string s;
  for (const auto& r : c.tokens) {
    EXPECT_LE(r.logprob, 0.0);
    EXPECT_EQ(r.byte_offset, s.size());
    s += r.token_text;
  }
  EXPECT_EQ(s, c.text);
}

TEST(MockProvider, GenerateStopsAtStopSequence) {
  MockBehavior b;
  b.fixed_output = "first part\n\nsecond part";
  auto p = mock_provider(1, b);
  EXPECT_EQ(p->proxy_generate("ctx", 16, {"\n\n"}), "first part");
  EXPECT_EQ(p->proxy_generate("ctx", 16, {}), "first part\n\nsecond part");
}

TEST(Replay, RecordThenServeWithoutCalls) {
  TempDir dir;
  const auto path = dir / "replay.jsonl";
  auto inner = mock_provider(11);
  auto recording = replay_provider(path, "m", inner);
  const auto first = recording->proxy_token_nlls("ctx", "alpha beta");
  const auto gen = recording->proxy_generate("ctx", 8, {});
  const auto fc = recording->frontier_complete(build_prompt("t", "q?"));
  EXPECT_EQ(inner->calls(), 3u);
  // Second identical request is a hit.
  recording->proxy_token_nlls("ctx", "alpha beta");
  EXPECT_EQ(inner->calls(), 3u);

  auto replay = replay_provider(path, "m");
  EXPECT_EQ(replay->proxy_token_nlls("ctx", "alpha beta"), first);
  EXPECT_EQ(replay->proxy_generate("ctx", 8, {}), gen);
  EXPECT_EQ(replay->frontier_complete(build_prompt("t", "q?")).text, fc.text);
  EXPECT_EQ(replay->calls(), 0u);
}

TEST(Replay, MissWithoutBackendIsProviderError) {
  TempDir dir;
  const auto path = dir / "replay.jsonl";
  replay_provider(path, "m", mock_provider(1))->proxy_token_nlls("a", "b");
  auto replay = replay_provider(path, "m");
  try {
    replay->proxy_token_nlls("a", "c");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Provider);
  }
}

TEST(Replay, MissingFileIsValidationError) {
  TempDir dir;
  try {
    replay_provider(dir / "nope.jsonl", "m");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(Replay, KeyIsCanonical) {
  const nlohmann::json a = nlohmann::json::parse(R"({"x": 1, "y": [1, 2]})");
  const nlohmann::json b = nlohmann::json::parse(R"({"y":[1,2],"x":1})");
  EXPECT_EQ(replay_key("m", "nll", a), replay_key("m", "nll", b));
  EXPECT_NE(replay_key("m", "nll", a), replay_key("m2", "nll", a));
  EXPECT_EQ(replay_key("m", "nll", a).size(), 64u);
}

TEST(TokenText, PartialUtf8RoundTrips) {
  const std::string partial = "\xe2\x88";
  const auto j = token_text_to_json(partial);
  EXPECT_TRUE(j.is_object());
  EXPECT_EQ(token_text_from_json(j), partial);
  EXPECT_EQ(token_text_from_json(token_text_to_json("plain")), "plain");
  EXPECT_TRUE(token_text_to_json("plain").is_string());
}

TEST(TokenText, Normalization) {
  EXPECT_EQ(normalize_token_text("\xE2\x96\x81Hello", TokenFormat::SentencePiece), " Hello");
  EXPECT_EQ(normalize_token_text("<0x0A>", TokenFormat::SentencePiece), "\n");
  EXPECT_EQ(normalize_token_text("\xC4\xA0world", TokenFormat::Gpt2Bytes), " world");
  EXPECT_EQ(normalize_token_text("\xC4\x8A", TokenFormat::Gpt2Bytes), "\n");
  EXPECT_EQ(normalize_token_text("bytes:\\xe2\\x88", TokenFormat::Plain), "\xe2\x88");
  EXPECT_EQ(normalize_token_text("abc", TokenFormat::Plain), "abc");
}

TEST(RemoteProvider, FrontierOverLoopback) {
  FakeOpenAIServer server;
  auto p = make_provider(remote_config(server.endpoint()), ProviderRole::Frontier);
  const auto c = p->frontier_complete(build_prompt("math", "What is 6 times 7?"));
  std::string s;
  for (const auto& r : c.tokens) s += r.token_text;
  EXPECT_EQ(s, c.text);
  const auto ex = extract_trace(c.text);
  const auto toks = slice_reasoning_tokens(c.text, ex, c.tokens);
  std::string r;
  for (const auto& t : toks) r += t.text;
  EXPECT_EQ(r, ex.reasoning);
  EXPECT_NE(ex.reasoning.find("caf\xc3\xa9"), std::string::npos);
}

TEST(RemoteProvider, EchoScoringSkipsBosAndContext) {
  FakeOpenAIServer server;
  auto p = make_provider(remote_config(server.endpoint()), ProviderRole::Proxy);
  const auto v = p->proxy_token_nlls("Question: why?\nAnswer:\n", "Because it is. Done");
  EXPECT_EQ(joined(v), "Because it is. Done");
  for (const auto& t : v) {
    EXPECT_TRUE(std::isfinite(t.nll));
    EXPECT_GE(t.nll, 0.0);
  }
  EXPECT_EQ(p->proxy_generate("ctx", 8, {}), "add them up\nFinal Answer: 7");
}

TEST(RemoteProvider, BoundaryCrossingTokenIsRejected) {
  FakeOpenAIServer server;
  auto p = make_provider(remote_config(server.endpoint()), ProviderRole::Proxy);
  // The fake tokenizer glues "Answer:" and "x" into one token.
  try {
    p->proxy_token_nlls("Answer:", "x y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Boundary);
  }
}

TEST(RemoteProvider, RetriesTransientFailures) {
  FakeServerOptions opts;
  opts.fail_first = 2;
  FakeOpenAIServer server(opts);
  auto cfg = remote_config(server.endpoint());
  cfg.probe = false;
  auto p = make_provider(cfg, ProviderRole::Proxy);
  EXPECT_EQ(joined(p->proxy_token_nlls("Q\n", "a b")), "a b");
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteProvider, GivesUpAfterRetries) {
  FakeServerOptions opts;
  opts.fail_first = 100;
  FakeOpenAIServer server(opts);
  auto cfg = remote_config(server.endpoint());
  cfg.probe = false;
  cfg.retries = 2;
  auto p = make_provider(cfg, ProviderRole::Proxy);
  try {
    p->proxy_token_nlls("Q\n", "a b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Provider);
  }
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteProvider, ProbeDetectsMissingLogprobs) {
  FakeServerOptions opts;
  opts.chat_logprobs = false;
  FakeOpenAIServer server(opts);
  try {
    make_provider(remote_config(server.endpoint()), ProviderRole::Frontier);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Capability);
  }
}

TEST(RemoteProvider, ApiKeyFromEnvironment) {
  FakeServerOptions opts;
  opts.required_key = "sk-test-123";
  FakeOpenAIServer server(opts);
  auto cfg = remote_config(server.endpoint());
  cfg.api_key_env = "RBRIDGE_TEST_KEY_UNSET_9";
  EXPECT_THROW(make_provider(cfg, ProviderRole::Proxy), Error);
  ::setenv("RBRIDGE_TEST_KEY", "sk-test-123", 1);
  cfg.api_key_env = "RBRIDGE_TEST_KEY";
  auto p = make_provider(cfg, ProviderRole::Proxy);
  EXPECT_EQ(joined(p->proxy_token_nlls("Q\n", "a")), "a");
}
