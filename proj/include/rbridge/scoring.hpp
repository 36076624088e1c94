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

// The weighted-NLL proxy score and the baseline proxy metrics.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbridge/alignment.hpp"
#include "rbridge/trace_acquisition.hpp"
#include "rbridge/types.hpp"

namespace rbridge {

struct WeightedToken {
  double nll = 0.0;
  double raw_weight = 0.0;
  double normalized_weight = 0.0;
  double weighted_nll = 0.0;
};

struct WeightedScore {
  std::string item_id;
  std::vector<WeightedToken> per_token;
  double value = 0.0;  // mean of weighted_nll
};

struct ScoreRecord {
  std::string benchmark;
  std::string dataset;
  std::int64_t checkpoint_tokens = 0;  // billions of pre-training tokens
  std::string metric;
  double value = 0.0;
  int orientation = 1;  // +1 higher-is-better, -1 lower-is-better

  bool operator==(const ScoreRecord&) const = default;
};

/// Orientation of a metric name: NLL-family and TED are -1, probability and
/// accuracy metrics +1. Unknown names throw InvalidInput.
int metric_orientation(std::string_view metric);

/// All metric names understood by the scoring pipeline, in canonical order.
const std::vector<std::string>& known_metrics();

/// Weighted NLL of one example. Weights must already be normalized.
WeightedScore rbridge_score(std::span<const ProxyTokenNLL> nlls, const WeightVector& weights);

/// Full composition for one trace: letter expansion, proxy span alignment,
/// per-token mean weight, MinMax, weighted mean.
WeightedScore score_trace(const TracedExample& trace, std::span<const ProxyTokenNLL> nlls);

double plain_nll(std::span<const ProxyTokenNLL> nlls);
double plain_nll(std::span<const double> nlls);

enum class LabelVariant { DatasetGold, Reasoning, ScB };

inline constexpr std::string_view kDefaultScbSuffix = "\nFinal Answer: {answer}";

/// Gold label for NLL scoring. `trace` may be null for DatasetGold.
std::string build_label(LabelVariant variant, const BenchmarkItem& item, const TracedExample* trace,
                        std::string_view scb_suffix_template = kDefaultScbSuffix);

/// Total sequence probability exp(-sum nll).
double mpca(std::span<const double> answer_nlls);

/// Levenshtein distance over token sequences with unit costs.
std::size_t ted(std::span<const std::string> generated, std::span<const std::string> gold);

/// Whitespace tokenization used for TED.
std::vector<std::string> whitespace_tokens(std::string_view text);

struct McMetrics {
  double correct_prob = 0.0;
  double norm_correct_prob = 0.0;
  double total_prob = 0.0;
  double margin = 0.0;
  double cf_accuracy = 0.0;
};

McMetrics mc_metrics(std::span<const double> option_nll_sums, int correct_index,
                     std::span<const std::size_t> option_lengths);

/// 1 when the normalized strings (or parsed numbers) match, else 0.
int accuracy(std::string_view extracted, std::string_view gold);

/// Final answer from free-form generated text: the text after the last
/// "Final Answer:" marker, else the last non-empty line.
std::string extract_answer(std::string_view generated);

enum class Stat { Mean, Min, Max };
Stat stat_from_string(std::string_view s);

double benchmark_aggregate(std::span<const double> per_example, Stat stat);

}  // namespace rbridge
