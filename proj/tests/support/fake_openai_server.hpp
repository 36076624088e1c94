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

// Loopback OpenAI-compatible server for wire-contract tests. It answers
// /v1/chat/completions with a JSON reasoning object plus per-token
// logprobs and /v1/completions with echoed prompt logprobs, tokenizing on
// whitespace the way the mock provider does.

#include <atomic>
#include <memory>
#include <string>
#include <thread>

namespace rbridge::testing {

struct FakeServerOptions {
  bool chat_logprobs = true;
  bool echo_bos = true;         // prepend a "<s>" token to echoed prompts
  int fail_first = 0;           // answer the first N requests with HTTP 500
  std::string required_key;     // expected bearer token, if any
};

class FakeOpenAIServer {
 public:
  explicit FakeOpenAIServer(FakeServerOptions options = {});
  ~FakeOpenAIServer();
  FakeOpenAIServer(const FakeOpenAIServer&) = delete;
  FakeOpenAIServer& operator=(const FakeOpenAIServer&) = delete;

  std::string endpoint() const;  // http://127.0.0.1:<port>/v1
  int requests() const { return requests_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

}  // namespace rbridge::testing
