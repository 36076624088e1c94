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

#include "rbridge/pipeline.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace rbridge;
using rbridge::testing::slurp;
using rbridge::testing::spit;
using rbridge::testing::TempDir;
namespace fs = std::filesystem;

namespace {

void write_benchmark(const fs::path& path, int n) {
  std::string text;
  for (int i = 0; i < n; ++i) {
    BenchmarkItem it{"q" + std::to_string(i), "arithmetic",
                     "What is " + std::to_string(i) + " plus " + std::to_string(i + 2) + "?",
                     std::to_string(2 * i + 2), std::nullopt, std::nullopt};
    text += canonical_dump(json(it)) + "\n";
  }
  spit(path, text);
}

json base_config(int checkpoints = 1, const std::vector<std::string>& datasets = {"d0"}) {
  json proxies = json::array();
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (int c = 1; c <= checkpoints; ++c) {
      proxies.push_back({{"dataset", datasets[d]},
                         {"checkpoint_tokens", 10 * c},
                         {"params", 1000000},
                         {"provider",
                          {{"model_id", datasets[d] + "-" + std::to_string(10 * c)},
                           {"seed", 7 * d + c},
                           {"mock", {{"nll_scale", 2.0 / (c + d * 0.5)}}}}}});
    }
  }
  return {{"run_id", "t"},
          {"created_at", "2026-01-01T00:00:00Z"},
          {"benchmarks", json::array({{{"name", "arith"}, {"path", "bench.jsonl"}}})},
          {"frontier", {{"model_id", "frontier-mock"}, {"seed", 42}}},
          {"proxies", proxies},
          {"metrics", {"rbridge", "nll"}}};
}

RunConfig make_config(const TempDir& dir, json raw, int items = 5) {
  write_benchmark(dir / "bench.jsonl", items);
  return parse_config(raw, dir.path());
}

std::vector<ScoreRecord> records_for(const std::string& metric, const std::vector<std::string>& datasets,
                                     const std::vector<std::int64_t>& ckpts, auto value) {
  std::vector<ScoreRecord> out;
  for (const auto& d : datasets) {
    for (auto c : ckpts) out.push_back({"arith", d, c, metric, value(d, c), metric_orientation(metric)});
  }
  return out;
}

}  // namespace

TEST(Pipeline, TraceWritesOneLinePerItem) {
  TempDir dir;
  const auto c = make_config(dir, base_config());
  const auto s = cmd_trace(c, dir / "run");
  EXPECT_EQ(s.traced, 5u);
  EXPECT_EQ(s.dropped_count(), 0u);
  const auto traces = read_jsonl<TracedExample>(traces_path(dir / "run", "arith"));
  ASSERT_EQ(traces.size(), 5u);
  EXPECT_EQ(traces[0].item_id, "q0");
  EXPECT_TRUE(verify_manifest(dir / "run", dir.path()).empty());
}

TEST(Pipeline, ReplayRerunMakesNoCalls) {
  TempDir dir;
  auto raw = base_config();
  raw["frontier"]["kind"] = "replay";
  raw["frontier"]["replay_path"] = "frontier.replay.jsonl";
  auto c = make_config(dir, base_config());
  auto inner = mock_provider(42);
  cmd_trace(c, dir / "run1", replay_provider(dir / "frontier.replay.jsonl", "frontier-mock", inner));
  EXPECT_EQ(inner->calls(), 5u);

  c = make_config(dir, raw);
  ASSERT_EQ(c.frontier->kind, ProviderKind::Replay);
  auto served = make_provider(*c.frontier, ProviderRole::Frontier);
  cmd_trace(c, dir / "run2", served);
  EXPECT_EQ(served->calls(), 0u);
  EXPECT_EQ(slurp(traces_path(dir / "run1", "arith")), slurp(traces_path(dir / "run2", "arith")));
}

TEST(Pipeline, DoubleFailureIsDropped) {
  TempDir dir;
  auto raw = base_config();
  raw["frontier"]["mock"] = {{"fail_markers", {"What is 3 plus"}}, {"fail_count", 2}};
  const auto c = make_config(dir, raw);
  std::ostringstream log;
  const auto s = cmd_trace(c, dir / "run", nullptr, &log);
  EXPECT_EQ(s.traced, 4u);
  EXPECT_EQ(s.dropped_count(), 1u);
  EXPECT_NE(log.str().find("dropped q3"), std::string::npos);
}

TEST(Pipeline, ScoreProducesRecordPerMetricAndCheckpoint) {
  TempDir dir;
  const auto c = make_config(dir, base_config(2), 3);
  cmd_trace(c, dir / "run");
  const auto s = cmd_score(c, dir / "run");
  const auto records = read_jsonl<ScoreRecord>(dir / "run" / "scores.jsonl");
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(s.records, 4u);
  EXPECT_EQ(records[0].metric, "rbridge");
  EXPECT_EQ(records[1].metric, "nll");
  EXPECT_EQ(records[0].checkpoint_tokens, 10);
  EXPECT_EQ(records[2].checkpoint_tokens, 20);
  for (const auto& r : records) EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_EQ(read_jsonl<ItemScore>(dir / "run" / "rbridge_items.jsonl").size(), 6u);
}

TEST(Pipeline, DegenerateWeightsGiveNll) {
  TempDir dir;
  auto raw = base_config();
  raw["frontier"]["mock"] = {{"fixed_logprob", -0.25}};
  const auto c = make_config(dir, raw);
  cmd_trace(c, dir / "run");
  cmd_score(c, dir / "run");
  const auto records = read_jsonl<ScoreRecord>(dir / "run" / "scores.jsonl");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].value, records[1].value);
}

TEST(Pipeline, ScoreWithoutTracesIsDataError) {
  TempDir dir;
  const auto c = make_config(dir, base_config());
  try {
    cmd_score(c, dir / "run");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(Pipeline, GenerationMetrics) {
  TempDir dir;
  auto raw = base_config();
  raw["metrics"] = {"acc", "ted", "nll_gold", "mpca"};
  raw["proxies"][0]["provider"]["mock"] = {{"fixed_output", "so 2\nFinal Answer: 2\n\nmore"}};
  const auto c = make_config(dir, raw);
  const auto s = cmd_score(c, dir / "run");
  const auto records = read_jsonl<ScoreRecord>(dir / "run" / "scores.jsonl");
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].metric, "acc");
  EXPECT_DOUBLE_EQ(records[0].value, 0.2);  // only q0 has gold answer 2
  EXPECT_EQ(records[3].metric, "mpca");
  EXPECT_TRUE(s.notes.empty());
}

TEST(Pipeline, FitExactCurve) {
  TempDir dir;
  const auto c = make_config(dir, base_config());
  const std::vector<std::int64_t> ckpts{10, 20, 30, 40, 50, 60};
  auto proxy = records_for("nll", {"d0"}, ckpts, [](auto&, auto ck) { return 3.0 - ck / 100.0; });
  auto more = records_for("rbridge", {"d0"}, ckpts, [](auto&, auto ck) { return 2.0 - ck / 50.0; });
  proxy.insert(proxy.begin(), more.begin(), more.end());
  const auto target = records_for("acc", {"d0"}, ckpts, [](auto&, auto ck) { return 0.1 + ck / 200.0; });
  write_jsonl(dir / "scores.jsonl", proxy);
  write_jsonl(dir / "targets.jsonl", target);
  const auto report = cmd_fit(c, dir / "run", {dir / "scores.jsonl", dir / "targets.jsonl"});
  ASSERT_EQ(report["rows"].size(), 2u);
  for (const auto& row : report["rows"]) {
    EXPECT_NEAR(row["final_curve"]["train_r2"].get<double>(), 1.0, 1e-12);
    EXPECT_LT(row["avg_test_mae"].get<double>(), 1e-9);
  }
  // Summary follows config metric order, not file order.
  EXPECT_EQ(report["summary"][0]["metric"], "rbridge");
  EXPECT_EQ(report["summary"][1]["metric"], "nll");
  EXPECT_TRUE(fs::exists(dir / "run" / "fit_report.json"));
}

TEST(Pipeline, FitMissingCheckpointNamesIt) {
  TempDir dir;
  auto raw = base_config();
  raw["metrics"] = {"nll"};
  const auto c = make_config(dir, raw);
  const std::vector<std::int64_t> ckpts{10, 20, 30, 40, 50, 60};
  write_jsonl(dir / "scores.jsonl", records_for("nll", {"d0"}, ckpts, [](auto&, auto ck) { return 1.0 * ck; }));
  write_jsonl(dir / "targets.jsonl",
              records_for("acc", {"d0"}, {10, 20, 30, 40, 50}, [](auto&, auto ck) { return 1.0 * ck; }));
  try {
    cmd_fit(c, dir / "run", {dir / "scores.jsonl", dir / "targets.jsonl"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
    EXPECT_NE(std::string(e.what()).find("60"), std::string::npos);
  }
}

TEST(Pipeline, RankMatchesOracle) {
  TempDir dir;
  auto raw = base_config();
  raw["metrics"] = {"nll"};
  const auto c = make_config(dir, raw);
  const std::vector<std::string> ds{"a", "b", "c", "d"};
  const std::map<std::string, double> proxy_v{{"a", 2.0}, {"b", 1.5}, {"c", 1.8}, {"d", 1.2}};
  const std::map<std::string, double> target_v{{"a", 0.2}, {"b", 0.5}, {"c", 0.4}, {"d", 0.3}};
  write_jsonl(dir / "scores.jsonl", records_for("nll", ds, {10}, [&](auto& d, auto) { return proxy_v.at(d); }));
  write_jsonl(dir / "targets.jsonl", records_for("acc", ds, {10}, [&](auto& d, auto) { return target_v.at(d); }));
  const auto report = cmd_rank(c, dir / "run", {dir / "scores.jsonl", dir / "targets.jsonl"});
  ASSERT_EQ(report["rows"].size(), 1u);
  // Lower NLL is better: negate the proxy for the oracle.
  std::vector<double> x, y;
  for (const auto& d : ds) {
    x.push_back(-proxy_v.at(d));
    y.push_back(target_v.at(d));
  }
  EXPECT_EQ(report["rows"][0]["dacc"].get<double>(), oracle::brute_dacc(x, y));
  EXPECT_NEAR(report["rows"][0]["tau"].get<double>(), oracle::brute_tau_b(x, y), 1e-15);
  EXPECT_EQ(report["compute"][0]["pareto"], true);
}

TEST(Pipeline, TransferPredictsAndRanks) {
  TempDir dir;
  auto raw = base_config();
  raw["metrics"] = {"nll"};
  const auto c = make_config(dir, raw);
  const std::vector<std::int64_t> ckpts{10, 20, 30, 40, 50, 60};
  write_jsonl(dir / "scores.jsonl", records_for("nll", {"d0"}, ckpts, [](auto&, auto ck) { return ck / 10.0; }));
  write_jsonl(dir / "targets.jsonl",
              records_for("acc", {"d0"}, ckpts, [](auto&, auto ck) { return 0.5 - ck / 200.0; }));
  cmd_fit(c, dir / "run", {dir / "scores.jsonl", dir / "targets.jsonl"});

  write_jsonl(dir / "new.jsonl", records_for("nll", {"x", "y"}, {60}, [](auto& d, auto) { return d == "x" ? 2.0 : 4.0; }));
  auto report = cmd_transfer(c, dir / "run", {std::nullopt, dir / "new.jsonl", std::nullopt});
  ASSERT_EQ(report["rows"].size(), 1u);
  const auto& preds = report["rows"][0]["predictions"];
  EXPECT_NEAR(preds[0]["predicted"].get<double>(), 0.4, 1e-12);
  EXPECT_NEAR(preds[1]["predicted"].get<double>(), 0.3, 1e-12);
  EXPECT_FALSE(report["rows"][0].contains("rank_correct"));

  write_jsonl(dir / "new_t.jsonl", records_for("acc", {"x", "y"}, {60}, [](auto& d, auto) { return d == "x" ? 0.45 : 0.35; }));
  report = cmd_transfer(c, dir / "run", {std::nullopt, dir / "new.jsonl", dir / "new_t.jsonl"});
  EXPECT_NEAR(report["rows"][0]["mae"].get<double>(), 0.05, 1e-12);
  EXPECT_EQ(report["rows"][0]["rank_correct"], true);
  EXPECT_EQ(report["averages"][0]["rank_total"], 1);
}

TEST(Pipeline, ReportWritesCsv) {
  TempDir dir;
  auto raw = base_config(2);
  raw["metrics"] = {"nll"};
  const auto c = make_config(dir, raw);
  const std::vector<std::string> ds{"a", "b", "c"};
  write_jsonl(dir / "run" / "scores.jsonl",
              records_for("nll", ds, {10, 20}, [](auto& d, auto ck) { return d[0] - 'a' + 1.0 / ck; }));
  write_jsonl(dir / "targets.jsonl",
              records_for("acc", ds, {10, 20}, [](auto& d, auto ck) { return 'z' - d[0] + 0.001 * ck; }));
  cmd_rank(c, dir / "run", {std::nullopt, dir / "targets.jsonl"});
  const auto files = cmd_report(dir / "run");
  EXPECT_FALSE(files.empty());
  const auto series = slurp(dir / "run" / "csv" / "series_arith_nll.csv");
  EXPECT_EQ(series.substr(0, series.find('\n')), "dataset,checkpoint_tokens,value");
  const auto dacc = slurp(dir / "run" / "csv" / "dacc_vs_flops.csv");
  EXPECT_EQ(dacc.substr(0, dacc.find('\n')), "metric,checkpoint_tokens,model_params,flops,dacc,pareto");
  // Both checkpoints rank perfectly: the cheaper one dominates.
  EXPECT_NE(dacc.find("nll,10,1000000,6e+16,1,1\n"), std::string::npos) << dacc;
  EXPECT_NE(dacc.find("nll,20,1000000,1.2e+17,1,0\n"), std::string::npos) << dacc;
}

TEST(Pipeline, ReportOnEmptyDirectoryFails) {
  TempDir dir;
  EXPECT_THROW(cmd_report(dir.path()), Error);
}

TEST(Pipeline, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
}
