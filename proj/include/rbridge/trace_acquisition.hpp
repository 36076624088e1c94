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

// Frontier reasoning traces: prompt construction, structured-response
// extraction, and the acquire-with-one-retry loop over a benchmark.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbridge/error.hpp"
#include "rbridge/providers.hpp"
#include "rbridge/types.hpp"

namespace rbridge {

struct BenchmarkItem {
  std::string id;
  std::string task_label;
  std::string question;
  std::string gold_answer;
  std::optional<std::vector<std::string>> options;
  std::optional<int> correct_option_index;

  bool operator==(const BenchmarkItem&) const = default;
};

/// Throws InvalidInput unless the option/index pairing is consistent.
void validate(const BenchmarkItem& item);

struct TracedExample {
  std::string item_id;
  std::string reasoning;
  std::string final_answer;
  std::vector<FrontierToken> frontier_tokens;  // concatenate to `reasoning`
  std::string frontier_model_id;

  bool operator==(const TracedExample&) const = default;
};

ChatPrompt build_prompt(std::string_view task_label, std::string_view question);

struct ExtractedTrace {
  std::string reasoning;
  std::string final_answer;
  // Raw byte range of the "reasoning" string contents (between the quotes).
  std::size_t reasoning_begin = 0;
  std::size_t reasoning_end = 0;
};

/// Finds the first well-formed JSON object in `raw_response` and returns
/// its "reasoning" and "final_answer" strings. Throws ParseFailure.
ExtractedTrace extract_trace(std::string_view raw_response);

/// Frontier tokens restricted to the reasoning string. Escape sequences are
/// decoded and each decoded byte is attributed to the token holding the
/// first byte of its escape, so the result concatenates to the decoded
/// reasoning exactly. Probabilities are exp(logprob) clamped to [1e-12, 1].
std::vector<FrontierToken> slice_reasoning_tokens(std::string_view raw_response,
                                                  const ExtractedTrace& extracted,
                                                  std::span<const TokenLogprobRow> rows);

struct AcquireOptions {
  int max_inflight = 4;
  int max_attempts = 2;
};

struct AcquireResult {
  std::vector<TracedExample> traces;  // input order
  std::vector<std::string> dropped;   // ids, input order
};

class PartialResultsError : public Error {
 public:
  PartialResultsError(AcquireResult partial, const std::string& message);
  const AcquireResult& partial() const noexcept { return partial_; }

 private:
  AcquireResult partial_;
};

AcquireResult acquire_traces(std::span<const BenchmarkItem> items, Provider& frontier,
                             const AcquireOptions& options = {});

}  // namespace rbridge
