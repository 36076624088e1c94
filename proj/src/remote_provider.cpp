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

#include "httplib.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include "rbridge/error.hpp"
#include "rbridge/providers.hpp"

namespace rbridge {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    fail(ErrorKind::Validation, "remote endpoint must look like http(s)://host[:port][/path]: " + url);
  }
  std::string path = m[2].matched ? m[2].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

class RemoteProvider final : public Provider {
 public:
  RemoteProvider(const ProviderConfig& config, ProviderRole role)
      : Provider(config.model_id, config.max_inflight),
        config_(config),
        role_(role),
        endpoint_(parse_endpoint(config.endpoint)) {
    if (!config_.api_key_env.empty()) {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (key == nullptr) {
        fail(ErrorKind::Validation,
             "environment variable " + config_.api_key_env + " holding the API key is not set");
      }
      api_key_ = key;
    }
    if (config_.probe) probe();
  }

  json execute(const std::string& kind, const json& body) override {
    if (kind == "frontier") return chat(body);
    if (kind == "nll") return score(body);
    if (kind == "generate") return generate(body);
    if (kind == "total_nll") return {{"total", nullptr}};
    fail(ErrorKind::Provider, "remote provider: unknown request kind " + kind);
  }

 private:
  void probe() {
    if (role_ == ProviderRole::Frontier) {
      json body = {{"system", ""}, {"user", "Reply with OK."}, {"temperature", 0}, {"max_tokens", 4}};
      const json resp = chat(body);
      if (resp["tokens"].is_null()) {
        fail(ErrorKind::Capability, "endpoint " + config_.endpoint + " does not return token logprobs");
      }
    } else {
      score({{"context", "Hello"}, {"continuation", " world"}});
    }
  }

  json post(const std::string& path, const json& payload) {
    const std::string body = payload.dump();
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto timeout = std::chrono::duration<double>(config_.timeout_s);
    std::string last_error;
    const int attempts = 1 + std::max(0, config_.retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(
            std::chrono::duration<double>(config_.backoff_s * std::pow(2.0, attempt - 1)));
      }
      count_call();
      httplib::Client client(endpoint_.origin);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      auto res = client.Post(endpoint_.base_path + path, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) {
        try {
          return json::parse(res->body);
        } catch (const json::exception& e) {
          fail(ErrorKind::Provider, "unparseable response from " + path + ": " + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      if (res->status == 400 || res->status == 404 || res->status == 422) {
        fail(ErrorKind::Capability, path + " rejected the request (" + last_error + ")");
      }
    }
    fail(ErrorKind::Provider, config_.endpoint + path + " failed after " +
                                  std::to_string(attempts) + " attempts: " + last_error);
  }

  json chat(const json& body) {
    json messages = json::array();
    if (!body.at("system").get<std::string>().empty()) {
      messages.push_back({{"role", "system"}, {"content", body["system"]}});
    }
    messages.push_back({{"role", "user"}, {"content", body.at("user")}});
    const json payload = {{"model", model_id()},
                          {"messages", messages},
                          {"temperature", 0},
                          {"logprobs", true},
                          {"max_tokens", body.value("max_tokens", config_.max_tokens)}};
    const json resp = post("/chat/completions", payload);
    try {
      const auto& choice = resp.at("choices").at(0);
      const auto text = choice.at("message").at("content").get<std::string>();
      if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
          !choice["logprobs"].contains("content") || choice["logprobs"]["content"].is_null()) {
        return {{"text", text}, {"tokens", nullptr}};
      }
      json tokens = json::array();
      for (const auto& entry : choice["logprobs"]["content"]) {
        std::string tok;
        if (entry.contains("bytes") && entry["bytes"].is_array()) {
          for (const auto& b : entry["bytes"]) tok.push_back(static_cast<char>(b.get<int>()));
        } else {
          tok = normalize_token_text(entry.at("token").get<std::string>(), config_.token_format);
        }
        tokens.push_back(json::array({token_text_to_json(tok), entry.at("logprob")}));
      }
      return {{"text", text}, {"tokens", tokens}};
    } catch (const json::exception& e) {
      fail(ErrorKind::Provider, std::string("malformed chat completion: ") + e.what());
    }
  }

  json score(const json& body) {
    const auto context = body.at("context").get<std::string>();
    const auto continuation = body.at("continuation").get<std::string>();
    const std::string prompt = context + continuation;
    const json payload = {{"model", model_id()}, {"prompt", prompt}, {"max_tokens", 1},
                          {"temperature", 0},    {"echo", true},     {"logprobs", 0}};
    const json resp = post("/completions", payload);
    json tokens = json::array();
    try {
      const auto& lp = resp.at("choices").at(0).at("logprobs");
      if (lp.is_null() || !lp.contains("token_logprobs")) return {{"tokens", nullptr}};
      const auto& toks = lp.at("tokens");
      const auto& logprobs = lp.at("token_logprobs");
      std::size_t pos = 0;
      for (std::size_t i = 0; i < toks.size() && pos < prompt.size(); ++i) {
        const auto text = normalize_token_text(toks[i].get<std::string>(), config_.token_format);
        if (pos == 0 && prompt.compare(0, text.size(), text) != 0 && text.size() > 1 &&
            text.front() == '<' && text.back() == '>') {
          continue;  // BOS-style special token echoed before the prompt
        }
        if (prompt.compare(pos, text.size(), text) != 0) {
          fail(ErrorKind::Boundary, "echoed token " + std::to_string(i) +
                                        " does not match the prompt at byte " + std::to_string(pos));
        }
        const std::size_t end = pos + text.size();
        if (pos < context.size() && end > context.size()) {
          fail(ErrorKind::Boundary, "proxy token spans the context/continuation boundary: bytes [" +
                                        std::to_string(pos) + ", " + std::to_string(end) +
                                        ") cross " + std::to_string(context.size()));
        }
        if (pos >= context.size()) {
          if (logprobs[i].is_null()) {
            fail(ErrorKind::Capability, "missing logprob for continuation token " + std::to_string(i));
          }
          tokens.push_back(json::array({token_text_to_json(text), -logprobs[i].get<double>()}));
        }
        pos = end;
      }
      if (pos < prompt.size()) {
        fail(ErrorKind::Boundary, "echoed tokens stop at byte " + std::to_string(pos) + " of " +
                                      std::to_string(prompt.size()));
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::Provider, std::string("malformed completion: ") + e.what());
    }
    return {{"tokens", tokens}};
  }

  json generate(const json& body) {
    const json payload = {{"model", model_id()},
                          {"prompt", body.at("context")},
                          {"max_tokens", body.at("max_tokens")},
                          {"temperature", 0},
                          {"stop", body.at("stop")}};
    const json resp = post("/completions", payload);
    try {
      return {{"text", resp.at("choices").at(0).at("text").get<std::string>()}};
    } catch (const json::exception& e) {
      fail(ErrorKind::Provider, std::string("malformed completion: ") + e.what());
    }
  }

  ProviderConfig config_;
  ProviderRole role_;
  Endpoint endpoint_;
  std::string api_key_;
};

}  // namespace

ProviderPtr remote_provider(const ProviderConfig& config, ProviderRole role) {
  return std::make_shared<RemoteProvider>(config, role);
}

}  // namespace rbridge
