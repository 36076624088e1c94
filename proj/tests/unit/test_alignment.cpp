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

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rbridge/error.hpp"

using namespace rbridge;

TEST(Alignment, ExpandGivesEachByteItsTokenProb) {
  const std::vector<FrontierToken> toks{{"Hel", 0.9}, {"lo", 0.6}};
  const auto letters = expand_to_letters("Hello", toks);
  EXPECT_EQ(letters.text, "Hello");
  EXPECT_EQ(letters.probs, (std::vector<double>{0.9, 0.9, 0.9, 0.6, 0.6}));
}

TEST(Alignment, ExpandMultibyteCharacterCountsEachByte) {
  // "é" is two bytes; both get the token's probability.
  const std::vector<FrontierToken> toks{{"caf", 0.5}, {"\xc3\xa9", 0.25}};
  const auto letters = expand_to_letters("caf\xc3\xa9", toks);
  ASSERT_EQ(letters.probs.size(), 5u);
  EXPECT_EQ(letters.probs[3], 0.25);
  EXPECT_EQ(letters.probs[4], 0.25);
}

TEST(Alignment, ExpandReportsFirstMismatchOffset) {
  const std::vector<FrontierToken> toks{{"Hel", 0.9}, {"p!", 0.6}};
  try {
    expand_to_letters("Hello", toks);
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_EQ(e.offset(), 3u);
  }
}

TEST(Alignment, ExpandShortAndLongCoverageFail) {
  const std::vector<FrontierToken> shorter{{"Hel", 0.9}};
  EXPECT_THROW(expand_to_letters("Hello", shorter), AlignmentError);
  const std::vector<FrontierToken> longer{{"Hello", 0.9}, {"!", 0.1}};
  EXPECT_THROW(expand_to_letters("Hello", longer), AlignmentError);
}

TEST(Alignment, HandDerivedWeight) {
  const std::vector<FrontierToken> toks{{"Hel", 0.9}, {"lo", 0.6}};
  const auto letters = expand_to_letters("Hello", toks);
  const std::vector<std::string> proxy{"Hello"};
  const auto spans = align_spans("Hello", proxy);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].byte_start, 0u);
  EXPECT_EQ(spans[0].byte_end, 5u);
  const auto w = alignment_weights(letters, spans);
  EXPECT_EQ(w.raw[0], 0.78);
  EXPECT_EQ(w.normalized[0], 1.0);
}

TEST(Alignment, SpansFollowProxySegmentation) {
  const std::vector<std::string> proxy{"He", "ll", "o"};
  const auto spans = align_spans("Hello", proxy);
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[1], (TokenSpan{"ll", 2, 4}));
  EXPECT_EQ(spans[2], (TokenSpan{"o", 4, 5}));
}

TEST(Alignment, SpanErrors) {
  const std::vector<std::string> wrong{"He", "xx"};
  EXPECT_THROW(align_spans("Hello", wrong), AlignmentError);
  const std::vector<std::string> residue{"He"};
  EXPECT_THROW(align_spans("Hello", residue), AlignmentError);
  const std::vector<std::string> overshoot{"Hello", "!"};
  EXPECT_THROW(align_spans("Hello", overshoot), AlignmentError);
  const std::vector<std::string> empty_tok{"He", "", "llo"};
  EXPECT_THROW(align_spans("Hello", empty_tok), AlignmentError);
}

TEST(Alignment, MinMax) {
  const std::vector<double> raw{0.2, 0.5, 0.8};
  const auto n = minmax_normalize(raw);
  EXPECT_EQ(n[0], 0.0);
  EXPECT_NEAR(n[1], 0.5, 1e-15);
  EXPECT_EQ(n[2], 1.0);
  const std::vector<double> flat{0.4, 0.4};
  EXPECT_EQ(minmax_normalize(flat), (std::vector<double>{1.0, 1.0}));
  EXPECT_THROW(minmax_normalize(std::vector<double>{}), Error);
}

TEST(Alignment, MinMaxAffineInvariance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(2 + trial % 9);
    for (auto& v : raw) v = u(rng);
    const double a = scale(rng);
    const double b = u(rng) - 0.5;
    std::vector<double> moved;
    for (double v : raw) moved.push_back(a * v + b);
    const auto n1 = minmax_normalize(raw);
    const auto n2 = minmax_normalize(moved);
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(n1[i], n2[i], 1e-12);
  }
}

TEST(Alignment, SegmentationConservesLetterMass) {
  // sum over proxy tokens of (mean weight * length) equals the total letter
  // probability mass whatever the segmentation.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> p(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto text = oracle::random_text(rng, 1, 60);
    std::vector<FrontierToken> toks;
    for (auto& piece : oracle::random_split(text, rng, 5)) toks.push_back({piece, p(rng)});
    const auto letters = expand_to_letters(text, toks);
    double mass = 0.0;
    for (double v : letters.probs) mass += v;
    const auto proxy = oracle::random_split(text, rng, 7);
    const auto spans = align_spans(text, proxy);
    const auto w = token_weights(letters, spans);
    double rebuilt = 0.0;
    for (std::size_t i = 0; i < spans.size(); ++i) rebuilt += w[i] * static_cast<double>(spans[i].size());
    EXPECT_NEAR(rebuilt, mass, 1e-9 * std::max(1.0, mass));
  }
}
