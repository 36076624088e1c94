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

// Letter-level re-aggregation of frontier confidences under a proxy
// tokenizer's segmentation. A "letter" is one byte of the UTF-8 encoding,
// so the weights are defined for any tokenizer, including byte-level ones
// whose tokens split codepoints.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbridge/types.hpp"

namespace rbridge {

struct LetterProbSequence {
  std::string text;
  std::vector<double> probs;  // one per byte of `text`
};

struct TokenSpan {
  std::string token_text;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;

  std::size_t size() const { return byte_end - byte_start; }
  bool operator==(const TokenSpan&) const = default;
};

struct WeightVector {
  std::vector<double> raw;
  std::vector<double> normalized;
};

/// Gives every byte of each frontier token that token's probability. The
/// token texts must concatenate to `text`; the first mismatching byte is
/// reported through AlignmentError::offset().
LetterProbSequence expand_to_letters(std::string_view text,
                                     std::span<const FrontierToken> tokens);

/// Greedy sequential prefix match of proxy token texts against the trace.
std::vector<TokenSpan> align_spans(std::string_view trace_text,
                                   std::span<const std::string> proxy_token_texts);

/// Mean letter probability inside each span.
std::vector<double> token_weights(const LetterProbSequence& letters,
                                  std::span<const TokenSpan> spans);

/// (x - min) / (max - min); all ones when max == min.
std::vector<double> minmax_normalize(std::span<const double> raw);

/// token_weights followed by minmax_normalize.
WeightVector alignment_weights(const LetterProbSequence& letters,
                               std::span<const TokenSpan> spans);

}  // namespace rbridge
