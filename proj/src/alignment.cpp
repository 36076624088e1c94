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

#include "rbridge/alignment.hpp"

#include <algorithm>

#include "rbridge/error.hpp"

namespace rbridge {

LetterProbSequence expand_to_letters(std::string_view text,
                                     std::span<const FrontierToken> tokens) {
  LetterProbSequence out;
  out.text.assign(text);
  out.probs.reserve(text.size());
  std::size_t pos = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& tok = tokens[t];
    if (!(tok.prob > 0.0 && tok.prob <= 1.0)) {
      fail(ErrorKind::InvalidInput,
           "frontier token " + std::to_string(t) + " has probability outside (0,1]");
    }
    for (char c : tok.text) {
      if (pos >= text.size() || text[pos] != c) {
        throw AlignmentError(pos, "frontier tokens do not reproduce the trace text");
      }
      out.probs.push_back(tok.prob);
      ++pos;
    }
  }
  if (pos != text.size()) {
    throw AlignmentError(pos, "frontier tokens end before the trace text");
  }
  return out;
}

std::vector<TokenSpan> align_spans(std::string_view trace_text,
                                   std::span<const std::string> proxy_token_texts) {
  std::vector<TokenSpan> spans;
  spans.reserve(proxy_token_texts.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < proxy_token_texts.size(); ++i) {
    const std::string& tok = proxy_token_texts[i];
    if (tok.empty()) {
      throw AlignmentError(pos, "proxy token " + std::to_string(i) + " is empty");
    }
    if (pos + tok.size() > trace_text.size()) {
      throw AlignmentError(pos, "proxy token " + std::to_string(i) + " overshoots the trace (" +
                                    std::to_string(pos + tok.size() - trace_text.size()) +
                                    " bytes past the end)");
    }
    const auto mismatch = std::mismatch(tok.begin(), tok.end(), trace_text.begin() + pos);
    if (mismatch.first != tok.end()) {
      const auto at = pos + static_cast<std::size_t>(mismatch.first - tok.begin());
      throw AlignmentError(at, "proxy token " + std::to_string(i) + " does not match the trace");
    }
    spans.push_back({tok, pos, pos + tok.size()});
    pos += tok.size();
  }
  if (pos != trace_text.size()) {
    throw AlignmentError(pos, "proxy tokens leave " + std::to_string(trace_text.size() - pos) +
                                  " trailing bytes uncovered");
  }
  return spans;
}

std::vector<double> token_weights(const LetterProbSequence& letters,
                                  std::span<const TokenSpan> spans) {
  if (spans.empty()) fail(ErrorKind::InvalidInput, "token_weights needs at least one span");
  if (letters.probs.size() != letters.text.size()) {
    fail(ErrorKind::InvalidInput, "letter probabilities do not cover the text");
  }
  std::vector<double> weights;
  weights.reserve(spans.size());
  for (const auto& span : spans) {
    if (span.byte_end <= span.byte_start || span.byte_end > letters.probs.size()) {
      throw AlignmentError(span.byte_start, "span outside the letter sequence");
    }
    const double first = letters.probs[span.byte_start];
    double sum = 0.0;
    bool uniform = true;
    for (std::size_t b = span.byte_start; b < span.byte_end; ++b) {
      sum += letters.probs[b];
      uniform = uniform && letters.probs[b] == first;
    }
    // A summed mean of equal values can drift by an ulp, which MinMax would
    // then stretch to the full [0, 1] range.
    weights.push_back(uniform ? first : sum / static_cast<double>(span.size()));
  }
  return weights;
}

std::vector<double> minmax_normalize(std::span<const double> raw) {
  if (raw.empty()) fail(ErrorKind::InvalidInput, "minmax_normalize of an empty vector");
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(raw.size(), 1.0);
  if (hi == lo) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / range;
  return out;
}

WeightVector alignment_weights(const LetterProbSequence& letters,
                               std::span<const TokenSpan> spans) {
  WeightVector w;
  w.raw = token_weights(letters, spans);
  w.normalized = minmax_normalize(w.raw);
  return w;
}

}  // namespace rbridge
