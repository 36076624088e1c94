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

#include "rbridge/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "rbridge/error.hpp"
#include "rbridge/text.hpp"

namespace rbridge {

namespace {

struct MetricInfo {
  const char* name;
  int orientation;
};

constexpr MetricInfo kMetrics[] = {
    {"rbridge", -1},       {"nll", -1},        {"nll_gold", -1},          {"nll_scb", -1},
    {"mpca", +1},          {"ted", -1},        {"acc", +1},               {"correct_prob", +1},
    {"norm_correct_prob", +1}, {"total_prob", +1}, {"margin", +1},        {"cf_acc", +1},
};

}  // namespace

int metric_orientation(std::string_view metric) {
  for (const auto& m : kMetrics) {
    if (metric == m.name) return m.orientation;
  }
  fail(ErrorKind::InvalidInput, "unknown metric '" + std::string(metric) + "'");
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& m : kMetrics) v.emplace_back(m.name);
    return v;
  }();
  return names;
}

WeightedScore rbridge_score(std::span<const ProxyTokenNLL> nlls, const WeightVector& weights) {
  if (nlls.size() != weights.normalized.size() || nlls.size() != weights.raw.size()) {
    fail(ErrorKind::InvalidInput, "rbridge_score: " + std::to_string(nlls.size()) +
                                      " NLLs but " + std::to_string(weights.normalized.size()) +
                                      " weights");
  }
  if (nlls.empty()) fail(ErrorKind::InvalidInput, "rbridge_score of an empty token list");
  WeightedScore out;
  out.per_token.reserve(nlls.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < nlls.size(); ++i) {
    const double w = weights.normalized[i];
    const double weighted = nlls[i].nll * w;
    out.per_token.push_back({nlls[i].nll, weights.raw[i], w, weighted});
    sum += weighted;
  }
  out.value = sum / static_cast<double>(nlls.size());
  return out;
}

WeightedScore score_trace(const TracedExample& trace, std::span<const ProxyTokenNLL> nlls) {
  const LetterProbSequence letters = expand_to_letters(trace.reasoning, trace.frontier_tokens);
  std::vector<std::string> texts;
  texts.reserve(nlls.size());
  for (const auto& t : nlls) texts.push_back(t.token_text);
  const auto spans = align_spans(trace.reasoning, texts);
  WeightedScore score = rbridge_score(nlls, alignment_weights(letters, spans));
  score.item_id = trace.item_id;
  return score;
}

double plain_nll(std::span<const double> nlls) {
  if (nlls.empty()) fail(ErrorKind::InvalidInput, "plain_nll of an empty list");
  double sum = 0.0;
  for (double v : nlls) sum += v;
  return sum / static_cast<double>(nlls.size());
}

double plain_nll(std::span<const ProxyTokenNLL> nlls) {
  if (nlls.empty()) fail(ErrorKind::InvalidInput, "plain_nll of an empty list");
  double sum = 0.0;
  for (const auto& t : nlls) sum += t.nll;
  return sum / static_cast<double>(nlls.size());
}

std::string build_label(LabelVariant variant, const BenchmarkItem& item, const TracedExample* trace,
                        std::string_view scb_suffix_template) {
  switch (variant) {
    case LabelVariant::DatasetGold:
      return item.gold_answer;
    case LabelVariant::Reasoning:
      if (trace == nullptr) fail(ErrorKind::InvalidInput, "reasoning label needs a trace");
      return trace->reasoning;
    case LabelVariant::ScB:
      if (trace == nullptr) fail(ErrorKind::InvalidInput, "ScB label needs a trace");
      return trace->reasoning + render_template(scb_suffix_template, {{"answer", trace->final_answer}});
  }
  fail(ErrorKind::InvalidInput, "unknown label variant");
}

double mpca(std::span<const double> answer_nlls) {
  if (answer_nlls.empty()) fail(ErrorKind::InvalidInput, "mpca of an empty list");
  double total = 0.0;
  for (double v : answer_nlls) total += v;
  return std::exp(-total);
}

std::size_t ted(std::span<const std::string> generated, std::span<const std::string> gold) {
  std::vector<std::size_t> prev(gold.size() + 1);
  std::vector<std::size_t> cur(gold.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= generated.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= gold.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (generated[i - 1] == gold[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[gold.size()];
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

McMetrics mc_metrics(std::span<const double> option_nll_sums, int correct_index,
                     std::span<const std::size_t> option_lengths) {
  const std::size_t n = option_nll_sums.size();
  if (n == 0 || option_lengths.size() != n) {
    fail(ErrorKind::InvalidInput, "mc_metrics: option NLLs and lengths must be non-empty and match");
  }
  if (correct_index < 0 || static_cast<std::size_t>(correct_index) >= n) {
    fail(ErrorKind::InvalidInput, "mc_metrics: correct index out of bounds");
  }
  const auto c = static_cast<std::size_t>(correct_index);
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (option_lengths[k] == 0) fail(ErrorKind::InvalidInput, "mc_metrics: zero-length option");
    p[k] = std::exp(-option_nll_sums[k]);
  }
  McMetrics m;
  m.correct_prob = p[c];
  m.total_prob = std::accumulate(p.begin(), p.end(), 0.0);
  m.norm_correct_prob = m.total_prob > 0.0 ? p[c] / m.total_prob : 0.0;
  double best_other = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k != c) best_other = std::max(best_other, p[k]);
  }
  m.margin = p[c] - best_other;
  std::size_t best = 0;
  double best_norm = option_nll_sums[0] / static_cast<double>(option_lengths[0]);
  for (std::size_t k = 1; k < n; ++k) {
    const double v = option_nll_sums[k] / static_cast<double>(option_lengths[k]);
    if (v < best_norm) {
      best_norm = v;
      best = k;
    }
  }
  m.cf_accuracy = best == c ? 1.0 : 0.0;
  return m;
}

namespace {

std::string normalize_answer(std::string_view s) {
  std::string t = ascii_lower(trim(s));
  std::erase(t, ',');
  while (!t.empty() && t.back() == '.') t.pop_back();
  return trim(t);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

int accuracy(std::string_view extracted, std::string_view gold) {
  const std::string a = normalize_answer(extracted);
  const std::string b = normalize_answer(gold);
  if (a.empty()) return 0;
  double x = 0.0;
  double y = 0.0;
  if (parse_number(a, x) && parse_number(b, y)) {
    const double scale = std::max(std::abs(x), std::abs(y));
    return std::abs(x - y) <= 1e-6 * scale ? 1 : 0;
  }
  return a == b ? 1 : 0;
}

std::string extract_answer(std::string_view generated) {
  static constexpr std::string_view kMarker = "Final Answer:";
  const auto at = generated.rfind(kMarker);
  if (at != std::string_view::npos) {
    auto rest = generated.substr(at + kMarker.size());
    return trim(rest.substr(0, rest.find('\n')));
  }
  std::string last;
  std::size_t start = 0;
  while (start <= generated.size()) {
    const auto nl = generated.find('\n', start);
    const auto line = trim(generated.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                                  : nl - start));
    if (!line.empty()) last = line;
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return last;
}

Stat stat_from_string(std::string_view s) {
  if (s == "mean") return Stat::Mean;
  if (s == "min") return Stat::Min;
  if (s == "max") return Stat::Max;
  fail(ErrorKind::Validation, "unknown aggregate statistic '" + std::string(s) + "'");
}

double benchmark_aggregate(std::span<const double> per_example, Stat stat) {
  if (per_example.empty()) fail(ErrorKind::InvalidInput, "aggregate of an empty list");
  switch (stat) {
    case Stat::Mean: return plain_nll(per_example);
    case Stat::Min: return *std::min_element(per_example.begin(), per_example.end());
    case Stat::Max: return *std::max_element(per_example.begin(), per_example.end());
  }
  return 0.0;
}

}  // namespace rbridge
