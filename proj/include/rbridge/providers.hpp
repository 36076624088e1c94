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

#pragma once

// Language-model access for the frontier and proxy roles. Every request is
// a (kind, JSON body) pair executed by a backend; the typed methods on
// Provider encode/decode those bodies so that replay files can cache any
// backend bit-exactly.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rbridge/types.hpp"

namespace rbridge {

struct ChatPrompt {
  std::string system;
  std::string user;

  /// Single-text rendering ("System: ...\n\nUser: ...").
  std::string render() const;
};

struct TokenLogprobRow {
  std::string token_text;
  double logprob = 0.0;  // nats, <= 0
  std::size_t byte_offset = 0;
};

struct Completion {
  std::string text;
  std::vector<TokenLogprobRow> tokens;
};

enum class ProviderKind { Remote, Replay, Mock };
enum class ProviderRole { Frontier, Proxy };
enum class MockTokenization { Whitespace, Byte };

// How a remote server spells token texts; normalized to plain UTF-8 bytes
// at the provider boundary.
enum class TokenFormat { Plain, SentencePiece, Gpt2Bytes };

struct MockBehavior {
  MockTokenization tokenization = MockTokenization::Whitespace;
  std::optional<int> uniform_vocab;  // every NLL == ln V
  double nll_scale = 1.0;
  std::optional<std::string> fixed_output;
  std::optional<double> fixed_logprob;
  bool logprobs = true;
  // Frontier prompts containing any marker get a malformed response for
  // their first `fail_count` calls.
  std::vector<std::string> fail_markers;
  int fail_count = 0;
};

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Mock;
  std::string model_id = "mock";
  std::string endpoint;      // remote: e.g. http://127.0.0.1:8000/v1
  std::string api_key_env;   // remote: environment variable holding the key
  std::string replay_path;   // replay: file to serve from; others: record-through
  int max_inflight = 4;
  double timeout_s = 60.0;
  int retries = 3;
  double backoff_s = 0.5;
  int max_tokens = 1024;     // frontier completion budget
  TokenFormat token_format = TokenFormat::Plain;
  bool probe = true;
  std::uint64_t seed = 0;
  MockBehavior mock;
};

class Provider {
 public:
  Provider(std::string model_id, int max_inflight);
  virtual ~Provider() = default;

  Provider(const Provider&) = delete;
  Provider& operator=(const Provider&) = delete;

  const std::string& model_id() const { return model_id_; }
  int max_inflight() const { return max_inflight_; }

  /// Greedy completion with one logprob row per generated token. The rows
  /// concatenate to the returned text.
  Completion frontier_complete(const ChatPrompt& prompt);

  /// Teacher-forced NLL of each proxy token of `continuation` given `context`.
  std::vector<ProxyTokenNLL> proxy_token_nlls(std::string_view context,
                                              std::string_view continuation);

  /// Greedy generation truncated at the earliest stop sequence.
  std::string proxy_generate(std::string_view context, int max_tokens,
                             const std::vector<std::string>& stop);

  /// Provider-reported total continuation NLL, for backends that have one.
  std::optional<double> continuation_total_nll(std::string_view context,
                                               std::string_view continuation);

  /// Raw request entry point; `kind` is one of "frontier", "nll",
  /// "generate", "total_nll".
  virtual nlohmann::json execute(const std::string& kind, const nlohmann::json& body) = 0;

  /// Number of requests that reached this backend.
  std::uint64_t calls() const { return calls_.load(); }

 protected:
  void count_call() { calls_.fetch_add(1); }

 private:
  std::string model_id_;
  int max_inflight_;
  std::atomic<std::uint64_t> calls_{0};
};

using ProviderPtr = std::shared_ptr<Provider>;

/// Deterministic in-process model. NLLs and logprobs are derived from a
/// seeded hash of (prefix, token).
ProviderPtr mock_provider(std::uint64_t seed, MockBehavior behavior = {},
                          std::string model_id = "mock", int max_inflight = 4);

/// Serves requests from a replay file. With `inner`, misses are forwarded
/// and appended to the file; without it a miss is a provider error.
ProviderPtr replay_provider(const std::filesystem::path& path, std::string model_id,
                            ProviderPtr inner = nullptr, int max_inflight = 4);

ProviderPtr remote_provider(const ProviderConfig& config, ProviderRole role);

ProviderPtr make_provider(const ProviderConfig& config, ProviderRole role);

/// Replay cache key: SHA-256 hex of the canonical [model_id, kind, body].
std::string replay_key(const std::string& model_id, const std::string& kind,
                       const nlohmann::json& body);

/// Token texts may be partial UTF-8 sequences; those are carried as
/// {"bytes": [...]} so JSON stays valid and the bytes are preserved.
nlohmann::json token_text_to_json(const std::string& text);
std::string token_text_from_json(const nlohmann::json& j);

/// Decodes a server token spelling into plain bytes.
std::string normalize_token_text(std::string_view token, TokenFormat format);

std::string_view to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(std::string_view s);
TokenFormat token_format_from_string(std::string_view s);
std::string_view to_string(TokenFormat format);

}  // namespace rbridge
