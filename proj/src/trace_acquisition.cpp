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

#include "rbridge/trace_acquisition.hpp"

#include <algorithm>
#include <cmath>

#include "rbridge/concurrency.hpp"
#include "rbridge/text.hpp"

namespace rbridge {

using nlohmann::json;

void validate(const BenchmarkItem& item) {
  if (item.id.empty()) fail(ErrorKind::InvalidInput, "benchmark item without id");
  if (item.options.has_value() != item.correct_option_index.has_value()) {
    fail(ErrorKind::InvalidInput,
         "item " + item.id + ": options and correct_index must be given together");
  }
  if (item.options) {
    const int idx = *item.correct_option_index;
    if (idx < 0 || idx >= static_cast<int>(item.options->size())) {
      fail(ErrorKind::InvalidInput, "item " + item.id + ": correct_index out of bounds");
    }
  }
}

ChatPrompt build_prompt(std::string_view task_label, std::string_view question) {
  if (trim(task_label).empty()) fail(ErrorKind::InvalidInput, "empty task label");
  if (trim(question).empty()) fail(ErrorKind::InvalidInput, "empty question");
  ChatPrompt p;
  p.system = "You are a helpful assistant that solves " + std::string(task_label) + " problems.";
  p.user = std::string(question) +
           "\n\nRespond ONLY with a JSON object in this exact format:\n"
           "{ \"reasoning\": \"your step by step reasoning\", \"final_answer\": \"your final answer\" }";
  return p;
}

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool read_hex4(std::string_view raw, std::size_t at, char32_t& out) {
  if (at + 4 > raw.size()) return false;
  out = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const int d = hex_digit(raw[at + k]);
    if (d < 0) return false;
    out = (out << 4) | static_cast<char32_t>(d);
  }
  return true;
}

// Decodes JSON string contents raw[begin, end). `origins`, when given,
// receives for each decoded byte the raw offset of the character (or escape)
// that produced it.
std::string decode_string(std::string_view raw, std::size_t begin, std::size_t end,
                          std::vector<std::size_t>* origins) {
  std::string out;
  auto emit = [&](std::string_view bytes, std::size_t origin) {
    out.append(bytes);
    if (origins) origins->insert(origins->end(), bytes.size(), origin);
  };
  std::size_t i = begin;
  while (i < end) {
    if (raw[i] != '\\') {
      emit(raw.substr(i, 1), i);
      ++i;
      continue;
    }
    const std::size_t origin = i;
    const char e = i + 1 < end ? raw[i + 1] : '\0';
    i += 2;
    switch (e) {
      case '"': emit("\"", origin); break;
      case '\\': emit("\\", origin); break;
      case '/': emit("/", origin); break;
      case 'b': emit("\b", origin); break;
      case 'f': emit("\f", origin); break;
      case 'n': emit("\n", origin); break;
      case 'r': emit("\r", origin); break;
      case 't': emit("\t", origin); break;
      case 'u': {
        char32_t cp = 0;
        if (!read_hex4(raw, i, cp)) fail(ErrorKind::ParseFailure, "bad \\u escape");
        i += 4;
        if (cp >= 0xD800 && cp <= 0xDBFF) {
          char32_t low = 0;
          if (i + 6 <= end && raw[i] == '\\' && raw[i + 1] == 'u' && read_hex4(raw, i + 2, low) &&
              low >= 0xDC00 && low <= 0xDFFF) {
            cp = 0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00);
            i += 6;
          } else {
            cp = 0xFFFD;
          }
        } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
          cp = 0xFFFD;
        }
        std::string bytes;
        append_utf8(bytes, cp);
        emit(bytes, origin);
        break;
      }
      default:
        fail(ErrorKind::ParseFailure, "bad escape in JSON string");
    }
  }
  return out;
}

// Index one past the closing quote of the string starting at raw[open].
std::size_t skip_string(std::string_view raw, std::size_t open) {
  std::size_t i = open + 1;
  while (i < raw.size()) {
    if (raw[i] == '\\') {
      i += 2;
    } else if (raw[i] == '"') {
      return i + 1;
    } else {
      ++i;
    }
  }
  return std::string_view::npos;
}

// Index one past the brace closing the object opened at raw[open].
std::size_t balanced_end(std::string_view raw, std::size_t open) {
  int depth = 0;
  std::size_t i = open;
  while (i < raw.size()) {
    const char c = raw[i];
    if (c == '"') {
      i = skip_string(raw, i);
      if (i == std::string_view::npos) return i;
      continue;
    }
    if (c == '{' || c == '[') ++depth;
    if (c == '}' || c == ']') {
      if (--depth == 0) return c == '}' ? i + 1 : std::string_view::npos;
    }
    ++i;
  }
  return std::string_view::npos;
}

std::size_t skip_ws(std::string_view raw, std::size_t i) {
  while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\n' || raw[i] == '\r' || raw[i] == '\t')) ++i;
  return i;
}

// Skips any JSON value starting at raw[i] (already known to be valid).
std::size_t skip_value(std::string_view raw, std::size_t i) {
  if (raw[i] == '"') return skip_string(raw, i);
  if (raw[i] == '{' || raw[i] == '[') {
    int depth = 0;
    while (i < raw.size()) {
      const char c = raw[i];
      if (c == '"') {
        i = skip_string(raw, i);
        continue;
      }
      if (c == '{' || c == '[') ++depth;
      if (c == '}' || c == ']') {
        if (--depth == 0) return i + 1;
      }
      ++i;
    }
    return i;
  }
  while (i < raw.size() && raw[i] != ',' && raw[i] != '}' && raw[i] != ']') ++i;
  return i;
}

struct Member {
  bool is_string = false;
  std::size_t begin = 0;  // string contents, when is_string
  std::size_t end = 0;
};

}  // namespace

ExtractedTrace extract_trace(std::string_view raw) {
  std::size_t obj_begin = std::string_view::npos;
  std::size_t obj_end = 0;
  for (std::size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const auto close = balanced_end(raw, open);
    if (close == std::string_view::npos) continue;
    try {
      if (json::parse(raw.substr(open, close - open)).is_object()) {
        obj_begin = open;
        obj_end = close;
        break;
      }
    } catch (const json::parse_error&) {
    }
  }
  if (obj_begin == std::string_view::npos) {
    fail(ErrorKind::ParseFailure, "no JSON object found in the response");
  }

  std::optional<Member> reasoning;
  std::optional<Member> answer;
  std::size_t i = skip_ws(raw, obj_begin + 1);
  while (i < obj_end && raw[i] != '}') {
    const std::size_t key_end = skip_string(raw, i);
    const std::string key = decode_string(raw, i + 1, key_end - 1, nullptr);
    i = skip_ws(raw, key_end);
    i = skip_ws(raw, i + 1);  // ':'
    Member m;
    const std::size_t value_end = skip_value(raw, i);
    if (raw[i] == '"') {
      m = {true, i + 1, value_end - 1};
    }
    if (key == "reasoning" && !reasoning) reasoning = m;
    if (key == "final_answer" && !answer) answer = m;
    i = skip_ws(raw, value_end);
    if (i < obj_end && raw[i] == ',') i = skip_ws(raw, i + 1);
  }
  if (!reasoning || !reasoning->is_string) {
    fail(ErrorKind::ParseFailure, "response object has no string \"reasoning\"");
  }
  if (!answer || !answer->is_string) {
    fail(ErrorKind::ParseFailure, "response object has no string \"final_answer\"");
  }
  ExtractedTrace out;
  out.reasoning = decode_string(raw, reasoning->begin, reasoning->end, nullptr);
  out.final_answer = decode_string(raw, answer->begin, answer->end, nullptr);
  out.reasoning_begin = reasoning->begin;
  out.reasoning_end = reasoning->end;
  if (trim(out.reasoning).empty()) fail(ErrorKind::ParseFailure, "empty reasoning");
  return out;
}

std::vector<FrontierToken> slice_reasoning_tokens(std::string_view raw,
                                                  const ExtractedTrace& extracted,
                                                  std::span<const TokenLogprobRow> rows) {
  std::vector<std::size_t> origins;
  const std::string decoded =
      decode_string(raw, extracted.reasoning_begin, extracted.reasoning_end, &origins);
  std::vector<FrontierToken> out;
  std::size_t j = 0;
  for (const auto& row : rows) {
    const std::size_t row_end = row.byte_offset + row.token_text.size();
    std::string text;
    while (j < decoded.size() && origins[j] < row_end) text.push_back(decoded[j++]);
    if (text.empty()) continue;
    const double p = std::clamp(std::exp(row.logprob), 1e-12, 1.0);
    out.push_back({std::move(text), p});
  }
  if (j != decoded.size()) {
    throw AlignmentError(j, "frontier tokens do not cover the reasoning span");
  }
  return out;
}

PartialResultsError::PartialResultsError(AcquireResult partial, const std::string& message)
    : Error(ErrorKind::PartialResults, message), partial_(std::move(partial)) {}

AcquireResult acquire_traces(std::span<const BenchmarkItem> items, Provider& frontier,
                             const AcquireOptions& options) {
  std::vector<std::optional<TracedExample>> slots(items.size());
  const auto errors = for_each_bounded(items.size(), options.max_inflight, [&](std::size_t i) {
    const auto& item = items[i];
    const ChatPrompt prompt = build_prompt(item.task_label, item.question);
    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
      const Completion completion = frontier.frontier_complete(prompt);
      ExtractedTrace extracted;
      try {
        extracted = extract_trace(completion.text);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseFailure) continue;
        throw;
      }
      slots[i] = TracedExample{item.id, extracted.reasoning, extracted.final_answer,
                               slice_reasoning_tokens(completion.text, extracted, completion.tokens),
                               frontier.model_id()};
      return;
    }
  });

  AcquireResult result;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (slots[i]) {
      result.traces.push_back(std::move(*slots[i]));
    } else if (!errors[i]) {
      result.dropped.push_back(items[i].id);
    }
  }
  for (const auto& err : errors) {
    if (!err) continue;
    try {
      std::rethrow_exception(err);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Provider || e.kind() == ErrorKind::Capability) {
        throw PartialResultsError(std::move(result),
                                  std::string("trace acquisition aborted: ") + e.what());
      }
      throw;
    }
  }
  return result;
}

}  // namespace rbridge
