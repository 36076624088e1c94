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

#include "oracles.hpp"

#include <cmath>

namespace rbridge::oracle {

double naive_rbridge(const std::vector<FrontierToken>& frontier,
                     const std::vector<std::pair<std::string, double>>& proxy) {
  std::vector<double> byte_prob;
  for (const auto& t : frontier) {
    for (std::size_t k = 0; k < t.text.size(); ++k) byte_prob.push_back(t.prob);
  }
  std::vector<double> w;
  std::size_t at = 0;
  for (const auto& [text, nll] : proxy) {
    double s = 0.0;
    double first = byte_prob[at];
    bool constant = true;
    for (std::size_t k = 0; k < text.size(); ++k) {
      s += byte_prob[at + k];
      constant = constant && byte_prob[at + k] == first;
    }
    // The mean of a constant run is that constant, with no rounding drift.
    w.push_back(constant ? first : s / static_cast<double>(text.size()));
    at += text.size();
  }
  double lo = w[0];
  double hi = w[0];
  for (double v : w) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double norm = hi == lo ? 1.0 : (w[i] - lo) / (hi - lo);
    total += proxy[i].second * norm;
  }
  return total / static_cast<double>(w.size());
}

double brute_dacc(const std::vector<double>& x, const std::vector<double>& y) {
  int agree = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      ++pairs;
      const int sx = (x[i] > x[j]) - (x[i] < x[j]);
      const int sy = (y[i] > y[j]) - (y[i] < y[j]);
      if (sx == sy) ++agree;
    }
  }
  return static_cast<double>(agree) / pairs;
}

double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double num = 0.0;
  double n0 = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = (x[i] > x[j]) - (x[i] < x[j]);
      const int sy = (y[i] > y[j]) - (y[i] < y[j]);
      num += sx * sy;
      n0 += 1.0;
      if (sx == 0) tx += 1.0;
      if (sy == 0) ty += 1.0;
    }
  }
  return num / std::sqrt((n0 - tx) * (n0 - ty));
}

std::vector<bool> brute_pareto(const std::vector<std::pair<double, double>>& pts) {
  std::vector<bool> out(pts.size(), true);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const bool weak = pts[j].first <= pts[i].first && pts[j].second >= pts[i].second;
      const bool strict = pts[j].first < pts[i].first || pts[j].second > pts[i].second;
      if (weak && strict) out[i] = false;
    }
  }
  return out;
}

std::vector<std::string> random_split(const std::string& text, std::mt19937_64& rng, int max_piece) {
  std::vector<std::string> out;
  std::uniform_int_distribution<int> len(1, max_piece);
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(len(rng)), text.size() - i);
    out.push_back(text.substr(i, n));
    i += n;
  }
  return out;
}

std::string random_text(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz  0123456789.,+=\n";
  static const char* multibyte[] = {"\xc3\xa9", "\xe2\x88\x91", "\xf0\x9f\x99\x82"};
  std::uniform_int_distribution<std::size_t> n(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() + 2);
  std::string s;
  const auto target = n(rng);
  while (s.size() < target) {
    const auto k = pick(rng);
    if (k < alphabet.size()) {
      s.push_back(alphabet[k]);
    } else {
      s += multibyte[k - alphabet.size()];
    }
  }
  return s;
}

}  // namespace rbridge::oracle
