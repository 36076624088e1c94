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

#include <cctype>
#include <cmath>
#include <map>
#include <mutex>

#include "rbridge/error.hpp"
#include "rbridge/providers.hpp"

namespace rbridge {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in the open interval (0, 1).
double unit(std::uint64_t h) {
  return (static_cast<double>(splitmix(h) >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<std::string> tokenize(std::string_view text, MockTokenization mode) {
  std::vector<std::string> out;
  if (mode == MockTokenization::Byte) {
    for (char c : text) out.emplace_back(1, c);
    return out;
  }
  // Leading whitespace is attached to the following word; trailing
  // whitespace becomes its own token.
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

class MockProvider final : public Provider {
 public:
  MockProvider(std::uint64_t seed, MockBehavior behavior, std::string model_id, int max_inflight)
      : Provider(std::move(model_id), max_inflight),
        basis_(splitmix(seed ^ kFnvOffset)),
        behavior_(std::move(behavior)) {
    if (behavior_.uniform_vocab && *behavior_.uniform_vocab < 1) {
      fail(ErrorKind::Validation, "uniform vocabulary size must be >= 1");
    }
  }

  json execute(const std::string& kind, const json& body) override {
    count_call();
    if (kind == "frontier") return frontier(body);
    if (kind == "nll") return nll(body);
    if (kind == "total_nll") return total_nll(body);
    if (kind == "generate") return generate(body);
    fail(ErrorKind::Provider, "mock provider: unknown request kind " + kind);
  }

 private:
  double token_nll(std::uint64_t prefix_state, const std::string& tok) const {
    if (behavior_.uniform_vocab) return std::log(static_cast<double>(*behavior_.uniform_vocab));
    const double u = unit(prefix_state ^ fnv1a(basis_ ^ 0x5bd1e995ULL, tok));
    return -std::log(u) * behavior_.nll_scale;
  }

  json nll(const json& body) const {
    const auto context = body.at("context").get<std::string>();
    const auto continuation = body.at("continuation").get<std::string>();
    std::uint64_t state = fnv1a(fnv1a(basis_, "nll|"), context);
    json tokens = json::array();
    for (const auto& tok : tokenize(continuation, behavior_.tokenization)) {
      tokens.push_back(json::array({token_text_to_json(tok), token_nll(state, tok)}));
      state = fnv1a(state, tok);
    }
    return {{"tokens", tokens}};
  }

  // Independent summation path used to cross-check per-token NLLs.
  json total_nll(const json& body) const {
    const auto context = body.at("context").get<std::string>();
    const auto continuation = body.at("continuation").get<std::string>();
    const auto toks = tokenize(continuation, behavior_.tokenization);
    std::vector<std::uint64_t> states(toks.size());
    std::uint64_t state = fnv1a(fnv1a(basis_, "nll|"), context);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      states[i] = state;
      state = fnv1a(state, toks[i]);
    }
    double total = 0.0;
    for (std::size_t i = toks.size(); i-- > 0;) total += token_nll(states[i], toks[i]);
    return {{"total", total}};
  }

  json frontier(const json& body) {
    const auto system = body.at("system").get<std::string>();
    const auto user = body.at("user").get<std::string>();
    const std::uint64_t prompt_hash = fnv1a(fnv1a(basis_, system), user);

    std::string text;
    bool scripted_failure = false;
    for (const auto& marker : behavior_.fail_markers) {
      if (!marker.empty() && user.find(marker) != std::string::npos) scripted_failure = true;
    }
    if (scripted_failure) {
      std::lock_guard lock(mu_);
      auto& n = failures_served_[prompt_hash];
      if (n < behavior_.fail_count) {
        ++n;
        text = "I am unable to answer in the requested format.";
      } else {
        scripted_failure = false;
      }
    }
    if (!scripted_failure) {
      text = behavior_.fixed_output ? *behavior_.fixed_output : synthesize(user, prompt_hash);
    }
    if (!behavior_.logprobs) return {{"text", text}, {"tokens", nullptr}};

    json tokens = json::array();
    std::uint64_t state = fnv1a(prompt_hash, "frontier|");
    for (const auto& tok : tokenize(text, behavior_.tokenization)) {
      const double lp = behavior_.fixed_logprob
                            ? *behavior_.fixed_logprob
                            : 0.25 * std::log(unit(state ^ fnv1a(basis_, tok)));
      tokens.push_back(json::array({token_text_to_json(tok), lp}));
      state = fnv1a(state, tok);
    }
    return {{"text", text}, {"tokens", tokens}};
  }

  std::string synthesize(const std::string& user, std::uint64_t h) const {
    std::string question = user.substr(0, user.find("\n\n"));
    if (question.size() > 80) question.resize(80);
    const auto answer = std::to_string(splitmix(h) % 1000);
    static const char* kSteps[] = {"identify the given quantities", "set up the relation",
                                   "combine the terms carefully", "check the arithmetic",
                                   "simplify the expression", "verify against the question"};
    std::string reasoning = "We need to solve: \"" + question + "\".";
    const int steps = 2 + static_cast<int>(splitmix(h ^ 1) % 3);
    for (int s = 0; s < steps; ++s) {
      reasoning += "\nStep " + std::to_string(s + 1) + ": " + kSteps[splitmix(h + s) % 6] + ".";
    }
    reasoning += "\nSo the answer is " + answer + ".";
    const json obj = {{"reasoning", reasoning}, {"final_answer", answer}};
    const std::string payload = obj.dump();
    switch (splitmix(h ^ 2) % 3) {
      case 0: return payload;
      case 1: return "```json\n" + payload + "\n```";
      default: return "Sure, here is my answer:\n" + payload + "\nHope this helps.";
    }
  }

  json generate(const json& body) const {
    const auto context = body.at("context").get<std::string>();
    const int max_tokens = body.at("max_tokens").get<int>();
    if (behavior_.fixed_output) return {{"text", *behavior_.fixed_output}};
    static const char* kWords[] = {"we", "add", "the", "numbers", "so", "then", "result", "is"};
    const std::uint64_t h = fnv1a(fnv1a(basis_, "generate|"), context);
    std::string text;
    for (int i = 0; i < max_tokens; ++i) {
      if (i > 0) text.push_back(' ');
      if (i == max_tokens - 1 || splitmix(h + i) % 9 == 0) {
        text += std::to_string(splitmix(h ^ 7) % 1000);
        break;
      }
      text += kWords[splitmix(h + 31 * i) % 8];
    }
    return {{"text", text}};
  }

  std::uint64_t basis_;
  MockBehavior behavior_;
  std::mutex mu_;
  std::map<std::uint64_t, int> failures_served_;
};

}  // namespace

ProviderPtr mock_provider(std::uint64_t seed, MockBehavior behavior, std::string model_id,
                          int max_inflight) {
  return std::make_shared<MockProvider>(seed, std::move(behavior), std::move(model_id),
                                        max_inflight);
}

}  // namespace rbridge
