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

// rbridge: trace, score, fit, rank, transfer and report subcommands.
//
//   rbridge <subcommand> --config run.json --out runs/a [--set key=value]... [-v]
//
// Exit codes: 0 success, 1 validation error, 2 provider error,
// 3 data or alignment error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rbridge/error.hpp"
#include "rbridge/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int verbosity = 0;
  std::string scores;
  std::string targets;
  std::string fit_report;
};

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::absolute(s);
}

int run(const std::string& sub, const Options& o) {
  std::ostream* log = &std::cout;
  if (sub == "report") {
    rbridge::cmd_report(o.out, log);
    return 0;
  }
  const auto config = rbridge::load_config(o.config, o.overrides);
  if (o.verbosity > 0) std::cerr << "config hash " << rbridge::config_hash(config) << "\n";
  const fs::path run_dir = o.out;
  fs::create_directories(run_dir);
  if (sub == "trace") {
    const auto s = rbridge::cmd_trace(config, run_dir, nullptr, log);
    std::cout << "traced " << s.traced << ", dropped " << s.dropped_count() << "\n";
  } else if (sub == "score") {
    rbridge::cmd_score(config, run_dir, {}, log);
  } else if (sub == "fit") {
    rbridge::cmd_fit(config, run_dir, {opt_path(o.scores), opt_path(o.targets)}, log);
  } else if (sub == "rank") {
    rbridge::cmd_rank(config, run_dir, {opt_path(o.scores), opt_path(o.targets)}, log);
  } else if (sub == "transfer") {
    rbridge::cmd_transfer(config, run_dir, {opt_path(o.fit_report), opt_path(o.scores), opt_path(o.targets)},
                          log);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proxy-model reasoning evaluation pipeline"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config) cmd->add_option("--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "run directory")->required();
    cmd->add_option("--set", o.overrides, "override a config value, key.path=value");
    cmd->add_flag("-v,--verbose", o.verbosity, "more logging");
  };

  auto* trace = app.add_subcommand("trace", "acquire frontier reasoning traces");
  add_common(trace, true);
  auto* score = app.add_subcommand("score", "score benchmarks with the proxy checkpoints");
  add_common(score, true);
  auto* fit = app.add_subcommand("fit", "k-fold curve fits of target vs proxy scores");
  add_common(fit, true);
  fit->add_option("--scores", o.scores, "proxy scores (default <out>/scores.jsonl)")->check(CLI::ExistingFile);
  fit->add_option("--targets", o.targets, "target scores")->check(CLI::ExistingFile);
  auto* rank = app.add_subcommand("rank", "dataset ranking agreement");
  add_common(rank, true);
  rank->add_option("--scores", o.scores, "proxy scores (default <out>/scores.jsonl)")->check(CLI::ExistingFile);
  rank->add_option("--targets", o.targets, "target scores")->check(CLI::ExistingFile);
  auto* transfer = app.add_subcommand("transfer", "apply fitted curves to other datasets");
  add_common(transfer, true);
  transfer->add_option("--fit-report", o.fit_report, "fit report (default <out>/fit_report.json)")
      ->check(CLI::ExistingFile);
  transfer->add_option("--scores", o.scores, "proxy scores of the new datasets")->check(CLI::ExistingFile);
  transfer->add_option("--targets", o.targets, "ground-truth target scores")->check(CLI::ExistingFile);
  auto* report = app.add_subcommand("report", "write plot-ready CSV tables");
  report->add_option("--out", o.out, "run directory")->required()->check(CLI::ExistingDirectory);
  report->add_flag("-v,--verbose", o.verbosity, "more logging");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const rbridge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rbridge::exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
