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

// Subcommand implementations behind the command-line tool. Each step reads
// its inputs, writes its artifacts under the run directory, and merges
// itself into the run manifest.
//
// Run directory layout:
//   <bench>/traces.jsonl      frontier traces per benchmark
//   scores.jsonl              ScoreRecords, benchmark x proxy x metric
//   rbridge_items.jsonl       per-item rBridge values
//   fit_report.json           k-fold curve fits per benchmark and metric
//   ranking_report.json       DAcc / tau per benchmark, metric, checkpoint
//   transfer_report.json      zero-shot predictions for other datasets
//   csv/                      plot-ready tables
//   manifest.json

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rbridge/providers.hpp"
#include "rbridge/store.hpp"

namespace rbridge {

std::filesystem::path traces_path(const std::filesystem::path& run_dir, const std::string& benchmark);

struct TraceSummary {
  std::size_t traced = 0;
  std::vector<std::pair<std::string, std::vector<std::string>>> dropped;  // per benchmark
  std::size_t dropped_count() const;
};

/// `frontier` overrides the configured frontier provider.
TraceSummary cmd_trace(const RunConfig& config, const std::filesystem::path& run_dir,
                       ProviderPtr frontier = nullptr, std::ostream* log = nullptr);

struct ScoreSummary {
  std::size_t records = 0;
  std::vector<std::string> notes;  // skipped metric/benchmark combinations
};

/// `proxies` (parallel to config.proxies) override the configured ones.
ScoreSummary cmd_score(const RunConfig& config, const std::filesystem::path& run_dir,
                       std::vector<ProviderPtr> proxies = {}, std::ostream* log = nullptr);

struct FitPaths {
  std::optional<std::filesystem::path> scores;   // default <run_dir>/scores.jsonl
  std::optional<std::filesystem::path> targets;  // default config.target_scores
};
json cmd_fit(const RunConfig& config, const std::filesystem::path& run_dir, const FitPaths& paths = {},
             std::ostream* log = nullptr);

json cmd_rank(const RunConfig& config, const std::filesystem::path& run_dir, const FitPaths& paths = {},
              std::ostream* log = nullptr);

struct TransferPaths {
  std::optional<std::filesystem::path> fit_report;  // default <run_dir>/fit_report.json
  std::optional<std::filesystem::path> scores;      // default config.transfer_scores, then run scores
  std::optional<std::filesystem::path> targets;     // default config.transfer_targets; optional
};
json cmd_transfer(const RunConfig& config, const std::filesystem::path& run_dir,
                  const TransferPaths& paths = {}, std::ostream* log = nullptr);

/// Writes CSV tables under <run_dir>/csv/ and returns their paths.
std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& run_dir,
                                              std::ostream* log = nullptr);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace rbridge
