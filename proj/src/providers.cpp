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

#include <cmath>
#include <fstream>
#include <mutex>
#include <unordered_map>

#include "rbridge/error.hpp"
#include "rbridge/text.hpp"

namespace rbridge {

using nlohmann::json;

std::string ChatPrompt::render() const { return "System: " + system + "\n\nUser: " + user; }

Provider::Provider(std::string model_id, int max_inflight)
    : model_id_(std::move(model_id)), max_inflight_(max_inflight) {
  if (max_inflight_ < 1) fail(ErrorKind::Validation, "max_inflight must be >= 1");
}

Completion Provider::frontier_complete(const ChatPrompt& prompt) {
  const json body = {{"system", prompt.system}, {"user", prompt.user}, {"temperature", 0}};
  const json resp = execute("frontier", body);
  if (!resp.is_object() || !resp.contains("text") || !resp["text"].is_string()) {
    fail(ErrorKind::Provider, "frontier response without text");
  }
  if (!resp.contains("tokens") || resp["tokens"].is_null()) {
    fail(ErrorKind::Capability, "frontier model " + model_id() + " returned no token logprobs");
  }
  Completion out;
  out.text = resp["text"].get<std::string>();
  std::size_t offset = 0;
  std::string joined;
  for (const auto& row : resp["tokens"]) {
    TokenLogprobRow r;
    r.token_text = token_text_from_json(row.at(0));
    r.logprob = row.at(1).get<double>();
    if (!std::isfinite(r.logprob)) fail(ErrorKind::Provider, "non-finite frontier logprob");
    r.logprob = std::min(r.logprob, 0.0);
    r.byte_offset = offset;
    offset += r.token_text.size();
    joined += r.token_text;
    out.tokens.push_back(std::move(r));
  }
  if (joined != out.text) {
    fail(ErrorKind::Capability, "frontier token texts do not reproduce the completion text");
  }
  return out;
}

std::vector<ProxyTokenNLL> Provider::proxy_token_nlls(std::string_view context,
                                                      std::string_view continuation) {
  if (continuation.empty()) return {};
  const json body = {{"context", context}, {"continuation", continuation}};
  const json resp = execute("nll", body);
  if (!resp.is_object() || !resp.contains("tokens") || resp["tokens"].is_null()) {
    fail(ErrorKind::Capability, "proxy model " + model_id() + " cannot score continuations");
  }
  std::vector<ProxyTokenNLL> out;
  std::string joined;
  for (const auto& row : resp["tokens"]) {
    ProxyTokenNLL t{token_text_from_json(row.at(0)), row.at(1).get<double>()};
    if (!std::isfinite(t.nll) || t.nll < -1e-9) {
      fail(ErrorKind::Provider, "proxy NLL must be finite and non-negative");
    }
    t.nll = std::max(t.nll, 0.0);
    joined += t.token_text;
    out.push_back(std::move(t));
  }
  if (joined != continuation) {
    std::size_t at = 0;
    while (at < joined.size() && at < continuation.size() && joined[at] == continuation[at]) ++at;
    fail(ErrorKind::Boundary, "proxy tokens do not reproduce the continuation at byte " +
                                  std::to_string(at));
  }
  return out;
}

std::string Provider::proxy_generate(std::string_view context, int max_tokens,
                                     const std::vector<std::string>& stop) {
  if (max_tokens <= 0) return {};
  const json body = {{"context", context}, {"max_tokens", max_tokens}, {"stop", stop}};
  const json resp = execute("generate", body);
  if (!resp.is_object() || !resp.contains("text") || !resp["text"].is_string()) {
    fail(ErrorKind::Provider, "generation response without text");
  }
  std::string text = resp["text"].get<std::string>();
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    const auto at = text.find(s);
    if (at != std::string::npos) cut = std::min(cut, at);
  }
  text.resize(cut);
  return text;
}

std::optional<double> Provider::continuation_total_nll(std::string_view context,
                                                       std::string_view continuation) {
  const json body = {{"context", context}, {"continuation", continuation}};
  const json resp = execute("total_nll", body);
  if (!resp.is_object() || !resp.contains("total") || resp["total"].is_null()) return std::nullopt;
  return resp["total"].get<double>();
}

std::string replay_key(const std::string& model_id, const std::string& kind, const json& body) {
  return sha256_hex(json::array({model_id, kind, body}).dump());
}

json token_text_to_json(const std::string& text) {
  if (is_valid_utf8(text)) return text;
  json bytes = json::array();
  for (char c : text) bytes.push_back(static_cast<unsigned char>(c));
  return json{{"bytes", bytes}};
}

std::string token_text_from_json(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.contains("bytes") && j["bytes"].is_array()) {
    std::string out;
    for (const auto& b : j["bytes"]) {
      const auto v = b.get<int>();
      if (v < 0 || v > 255) fail(ErrorKind::Data, "token byte out of range");
      out.push_back(static_cast<char>(v));
    }
    return out;
  }
  fail(ErrorKind::Data, "token text must be a string or {\"bytes\": [...]}");
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Inverse of the GPT-2 byte-to-unicode table.
const std::unordered_map<char32_t, unsigned char>& gpt2_unicode_to_byte() {
  static const auto table = [] {
    std::unordered_map<char32_t, unsigned char> m;
    std::vector<bool> direct(256, false);
    for (int b = '!'; b <= '~'; ++b) direct[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
    int n = 0;
    for (int b = 0; b < 256; ++b) {
      if (direct[b]) {
        m[static_cast<char32_t>(b)] = static_cast<unsigned char>(b);
      } else {
        m[static_cast<char32_t>(256 + n)] = static_cast<unsigned char>(b);
        ++n;
      }
    }
    return m;
  }();
  return table;
}

// Decodes one UTF-8 codepoint at s[i]; returns its length (1 on bad input).
std::size_t decode_codepoint(std::string_view s, std::size_t i, char32_t& cp) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = c < 0x80 ? 1 : (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 1;
  if (i + len > s.size()) len = 1;
  if (len == 1) {
    cp = c;
    return 1;
  }
  cp = c & (0xFF >> (len + 1));
  for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  return len;
}

}  // namespace

std::string normalize_token_text(std::string_view token, TokenFormat format) {
  // "bytes:\xe2\x80" is how several servers spell tokens that are not valid
  // UTF-8 on their own.
  if (token.rfind("bytes:", 0) == 0) {
    std::string out;
    std::size_t i = 6;
    while (i < token.size()) {
      if (token[i] == '\\' && i + 3 < token.size() && token[i + 1] == 'x' &&
          hex_value(token[i + 2]) >= 0 && hex_value(token[i + 3]) >= 0) {
        out.push_back(static_cast<char>(hex_value(token[i + 2]) * 16 + hex_value(token[i + 3])));
        i += 4;
      } else {
        out.push_back(token[i++]);
      }
    }
    return out;
  }
  switch (format) {
    case TokenFormat::Plain:
      return std::string(token);
    case TokenFormat::SentencePiece: {
      if (token.size() == 6 && token.substr(0, 3) == "<0x" && token[5] == '>' &&
          hex_value(token[3]) >= 0 && hex_value(token[4]) >= 0) {
        return std::string(1, static_cast<char>(hex_value(token[3]) * 16 + hex_value(token[4])));
      }
      std::string out;
      static constexpr std::string_view kSpaceMarker = "\xE2\x96\x81";
      std::size_t i = 0;
      while (i < token.size()) {
        if (token.substr(i, 3) == kSpaceMarker) {
          out.push_back(' ');
          i += 3;
        } else {
          out.push_back(token[i++]);
        }
      }
      return out;
    }
    case TokenFormat::Gpt2Bytes: {
      const auto& table = gpt2_unicode_to_byte();
      std::string out;
      std::size_t i = 0;
      while (i < token.size()) {
        char32_t cp = 0;
        const auto len = decode_codepoint(token, i, cp);
        const auto it = table.find(cp);
        if (it != table.end()) {
          out.push_back(static_cast<char>(it->second));
        } else {
          out.append(token.substr(i, len));
        }
        i += len;
      }
      return out;
    }
  }
  return std::string(token);
}

namespace {

class ReplayProvider final : public Provider {
 public:
  ReplayProvider(const std::filesystem::path& path, std::string model_id, ProviderPtr inner,
                 int max_inflight)
      : Provider(std::move(model_id), max_inflight), path_(path), inner_(std::move(inner)) {
    if (std::filesystem::exists(path_)) {
      load();
    } else if (!inner_) {
      fail(ErrorKind::Validation, "replay file does not exist: " + path_.string());
    }
  }

  json execute(const std::string& kind, const json& body) override {
    const auto key = replay_key(model_id(), kind, body);
    {
      std::lock_guard lock(mu_);
      if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    if (!inner_) {
      fail(ErrorKind::Provider, "replay miss for " + kind + " request " + key.substr(0, 12));
    }
    count_call();
    json response = inner_->execute(kind, body);
    std::lock_guard lock(mu_);
    if (cache_.emplace(key, response).second) append(key, kind, body, response);
    return response;
  }

 private:
  void load() {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json entry;
      try {
        entry = json::parse(line);
        cache_.emplace(entry.at("key_hash").get<std::string>(), entry.at("response_body"));
      } catch (const json::exception& e) {
        fail(ErrorKind::Data,
             path_.string() + ":" + std::to_string(line_no) + ": bad replay entry: " + e.what());
      }
    }
  }

  void append(const std::string& key, const std::string& kind, const json& body,
              const json& response) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) fail(ErrorKind::Data, "cannot append to replay file " + path_.string());
    const json entry = {{"key_hash", key},
                        {"request_body", {{"model_id", model_id()}, {"kind", kind}, {"body", body}}},
                        {"response_body", response}};
    out << entry.dump() << '\n';
    out.flush();
  }

  std::filesystem::path path_;
  ProviderPtr inner_;
  std::mutex mu_;
  std::unordered_map<std::string, json> cache_;
};

}  // namespace

ProviderPtr replay_provider(const std::filesystem::path& path, std::string model_id,
                            ProviderPtr inner, int max_inflight) {
  return std::make_shared<ReplayProvider>(path, std::move(model_id), std::move(inner),
                                          max_inflight);
}

ProviderPtr make_provider(const ProviderConfig& config, ProviderRole role) {
  ProviderPtr backend;
  switch (config.kind) {
    case ProviderKind::Replay:
      return replay_provider(config.replay_path, config.model_id, nullptr, config.max_inflight);
    case ProviderKind::Mock:
      backend = mock_provider(config.seed, config.mock, config.model_id, config.max_inflight);
      break;
    case ProviderKind::Remote:
      backend = remote_provider(config, role);
      break;
  }
  if (!config.replay_path.empty()) {
    return replay_provider(config.replay_path, config.model_id, backend, config.max_inflight);
  }
  return backend;
}

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::Remote: return "remote";
    case ProviderKind::Replay: return "replay";
    case ProviderKind::Mock: return "mock";
  }
  return "mock";
}

ProviderKind provider_kind_from_string(std::string_view s) {
  if (s == "remote") return ProviderKind::Remote;
  if (s == "replay") return ProviderKind::Replay;
  if (s == "mock") return ProviderKind::Mock;
  fail(ErrorKind::Validation, "unknown provider kind '" + std::string(s) + "'");
}

TokenFormat token_format_from_string(std::string_view s) {
  if (s == "plain") return TokenFormat::Plain;
  if (s == "sentencepiece") return TokenFormat::SentencePiece;
  if (s == "gpt2_bytes") return TokenFormat::Gpt2Bytes;
  fail(ErrorKind::Validation, "unknown token_format '" + std::string(s) + "'");
}

std::string_view to_string(TokenFormat format) {
  switch (format) {
    case TokenFormat::Plain: return "plain";
    case TokenFormat::SentencePiece: return "sentencepiece";
    case TokenFormat::Gpt2Bytes: return "gpt2_bytes";
  }
  return "plain";
}

}  // namespace rbridge
