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

// Persistence: JSONL record schemas, JSON run configuration, and run
// manifests. Serialization is canonical (sorted keys, no insignificant
// whitespace, shortest round-trip floats) so identical values always give
// identical bytes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rbridge/curvefit.hpp"
#include "rbridge/error.hpp"
#include "rbridge/providers.hpp"
#include "rbridge/scoring.hpp"
#include "rbridge/trace_acquisition.hpp"

namespace rbridge {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

std::string canonical_dump(const json& j);

void to_json(json& j, const BenchmarkItem& item);
void from_json(const json& j, BenchmarkItem& item);
void to_json(json& j, const TracedExample& trace);
void from_json(const json& j, TracedExample& trace);
void to_json(json& j, const ScoreRecord& record);
void from_json(const json& j, ScoreRecord& record);
void to_json(json& j, const FittedCurve& curve);
void from_json(const json& j, FittedCurve& curve);

/// Per-item rBridge value written alongside the aggregated scores.
struct ItemScore {
  std::string benchmark;
  std::string dataset;
  std::int64_t checkpoint_tokens = 0;
  std::string item_id;
  double value = 0.0;
  std::int64_t tokens = 0;

  bool operator==(const ItemScore&) const = default;
};
void to_json(json& j, const ItemScore& s);
void from_json(const json& j, ItemScore& s);

/// One line per record, canonical encoding, trailing newline.
template <typename T>
std::string encode_jsonl(std::span<const T> records) {
  std::string out;
  for (const auto& r : records) {
    out += canonical_dump(json(r));
    out.push_back('\n');
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& contents);

template <typename T>
void write_jsonl(const std::filesystem::path& path, std::span<const T> records) {
  write_text(path, encode_jsonl(records));
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
  write_jsonl(path, std::span<const T>(records));
}

/// Parses and validates each non-empty line; errors name the file and line.
template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Validation, "cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Reads a benchmark file and checks that item ids are unique.
std::vector<BenchmarkItem> read_benchmark(const std::filesystem::path& path);

struct BenchmarkRef {
  std::string name;
  std::filesystem::path path;  // resolved against the config directory
  std::string path_as_written;
};

struct ProxyCheckpoint {
  std::string dataset;
  std::int64_t checkpoint_tokens = 0;  // billions
  std::int64_t params = 0;
  ProviderConfig provider;
};

struct RunConfig {
  std::string run_id = "run";
  std::vector<BenchmarkRef> benchmarks;
  std::optional<ProviderConfig> frontier;
  std::vector<ProxyCheckpoint> proxies;
  std::vector<std::string> metrics{"rbridge", "nll"};
  int k = 5;
  std::string score_context_template = "Question: {question}\nAnswer:\n";
  std::string scb_suffix_template = std::string(kDefaultScbSuffix);
  int few_shot = 0;
  int max_inflight = 4;
  Stat aggregate = Stat::Mean;
  int generate_max_tokens = 256;
  std::vector<std::string> generate_stop{"\n\n"};
  std::string target_metric = "acc";
  std::optional<std::string> fit_dataset;
  std::optional<std::filesystem::path> target_scores;
  std::optional<std::filesystem::path> transfer_scores;
  std::optional<std::filesystem::path> transfer_targets;
  std::optional<std::string> created_at;

  std::filesystem::path base_dir;
  json resolved;  // canonical config with every default filled in
};

/// Applies `key.path=value` overrides (value parsed as JSON when possible,
/// otherwise taken as a string).
void apply_overrides(json& raw, std::span<const std::string> overrides);

RunConfig parse_config(const json& raw, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path,
                      std::span<const std::string> overrides = {});

std::string config_hash(const RunConfig& config);

struct RunManifest {
  std::string run_id;
  std::string created_at;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string frontier_model_id;
  std::vector<std::string> proxy_model_ids;
  std::map<std::string, std::string> inputs;   // path as written -> sha256
  std::map<std::string, std::string> outputs;  // run-dir relative -> sha256
  std::vector<std::string> steps;
  json config;
};

void to_json(json& j, const RunManifest& m);
void from_json(const json& j, RunManifest& m);

/// Timestamp for manifests: SOURCE_DATE_EPOCH when set, else now (UTC).
std::string manifest_timestamp(const RunConfig& config);

/// Merges a completed step into <run_dir>/manifest.json.
RunManifest record_step(const std::filesystem::path& run_dir, const RunConfig& config,
                        const std::string& step,
                        const std::vector<std::pair<std::string, std::filesystem::path>>& inputs,
                        const std::vector<std::string>& outputs);

/// Files whose current digest no longer matches the manifest.
std::vector<std::string> verify_manifest(const std::filesystem::path& run_dir,
                                         const std::filesystem::path& input_base);

}  // namespace rbridge
