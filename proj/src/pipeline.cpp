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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "rbridge/concurrency.hpp"
#include "rbridge/kernels.hpp"
#include "rbridge/ranking.hpp"
#include "rbridge/text.hpp"

namespace rbridge {

namespace fs = std::filesystem;

namespace {

std::ostream* null_log() {
  static std::ostream sink(nullptr);
  return &sink;
}

std::ostream& out(std::ostream* log) { return log ? *log : *null_log(); }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::Data, path.string() + ": not valid JSON");
  return j;
}

// Manifest key for an input file. Files produced inside the run directory
// are tracked as outputs already; anything else is keyed relative to the
// config directory so keys do not depend on where the run lives.
std::vector<std::pair<std::string, fs::path>> input_entries(const RunConfig& config,
                                                             const fs::path& run_dir,
                                                             const std::vector<fs::path>& files) {
  std::vector<std::pair<std::string, fs::path>> out;
  const auto run_abs = fs::weakly_canonical(run_dir);
  for (const auto& f : files) {
    const auto abs = fs::weakly_canonical(f);
    const auto rel_run = abs.lexically_relative(run_abs);
    if (!rel_run.empty() && *rel_run.begin() != "..") continue;
    auto key = abs.lexically_relative(fs::weakly_canonical(config.base_dir));
    if (key.empty()) key = abs;
    out.emplace_back(key.generic_string(), f);
  }
  return out;
}

std::string render_context(const RunConfig& config, const BenchmarkItem& item) {
  return render_template(config.score_context_template,
                         {{"question", item.question}, {"task", item.task_label}});
}

// Few-shot exemplars are the first `few_shot` other items of the same
// benchmark, each followed by its gold answer.
std::string scoring_context(const RunConfig& config, std::span<const BenchmarkItem> items,
                            std::size_t idx) {
  std::string ctx;
  int added = 0;
  for (std::size_t j = 0; j < items.size() && added < config.few_shot; ++j) {
    if (j == idx) continue;
    ctx += render_context(config, items[j]) + items[j].gold_answer + "\n\n";
    ++added;
  }
  return ctx + render_context(config, items[idx]);
}

bool is_mc_metric(const std::string& m) {
  return m == "correct_prob" || m == "norm_correct_prob" || m == "total_prob" || m == "margin" ||
         m == "cf_acc";
}

bool needs_trace(const std::string& m) { return m == "rbridge" || m == "nll" || m == "nll_scb"; }

struct ItemWork {
  std::vector<ProxyTokenNLL> reasoning;
  std::vector<double> gold;
  std::vector<double> scb;
  std::string generated;
  std::vector<double> option_sums;
  std::vector<std::size_t> option_lengths;
};

std::vector<double> nll_values(const std::vector<ProxyTokenNLL>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& t : v) out.push_back(t.nll);
  return out;
}

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

using SeriesKey = std::tuple<std::string, std::string, std::string>;  // benchmark, dataset, metric

std::map<std::pair<SeriesKey, std::int64_t>, double> index_records(const std::vector<ScoreRecord>& recs,
                                                                   const fs::path& source) {
  std::map<std::pair<SeriesKey, std::int64_t>, double> out;
  for (const auto& r : recs) {
    const auto key = std::make_pair(SeriesKey{r.benchmark, r.dataset, r.metric}, r.checkpoint_tokens);
    if (!out.emplace(key, r.value).second) {
      fail(ErrorKind::Data, source.string() + ": duplicate record for (" + r.benchmark + ", " +
                                r.dataset + ", " + r.metric + ", " +
                                std::to_string(r.checkpoint_tokens) + ")");
    }
  }
  return out;
}

// Config benchmarks first, then any others seen in the records, sorted.
std::vector<std::string> benchmark_order(const RunConfig& config, const std::vector<ScoreRecord>& recs) {
  std::vector<std::string> order;
  for (const auto& b : config.benchmarks) order.push_back(b.name);
  std::set<std::string> extra;
  for (const auto& r : recs) {
    if (std::find(order.begin(), order.end(), r.benchmark) == order.end()) extra.insert(r.benchmark);
  }
  order.insert(order.end(), extra.begin(), extra.end());
  return order;
}

std::string resolve_fit_dataset(const RunConfig& config, const std::vector<ScoreRecord>& recs) {
  if (config.fit_dataset) return *config.fit_dataset;
  std::set<std::string> datasets;
  for (const auto& r : recs) datasets.insert(r.dataset);
  if (datasets.size() != 1) {
    fail(ErrorKind::Validation,
         "scores cover " + std::to_string(datasets.size()) + " datasets; set fit_dataset");
  }
  return *datasets.begin();
}

fs::path require_targets(const RunConfig& config, const std::optional<fs::path>& given) {
  if (given) return *given;
  if (config.target_scores) return *config.target_scores;
  fail(ErrorKind::Validation, "no target scores given (config target_scores or --targets)");
}

json curve_json(const FittedCurve& c) { return json(c); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

fs::path traces_path(const fs::path& run_dir, const std::string& benchmark) {
  return run_dir / benchmark / "traces.jsonl";
}

std::size_t TraceSummary::dropped_count() const {
  std::size_t n = 0;
  for (const auto& [bench, ids] : dropped) n += ids.size();
  return n;
}

// ------------------------------------------------------------------ trace

TraceSummary cmd_trace(const RunConfig& config, const fs::path& run_dir, ProviderPtr frontier,
                       std::ostream* log) {
  if (config.benchmarks.empty()) fail(ErrorKind::Validation, "config lists no benchmarks");
  if (!frontier) {
    if (!config.frontier) fail(ErrorKind::Validation, "config has no frontier provider");
    frontier = make_provider(*config.frontier, ProviderRole::Frontier);
  }
  fs::create_directories(run_dir);
  TraceSummary summary;
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;
  for (const auto& bench : config.benchmarks) {
    const auto items = read_benchmark(bench.path);
    inputs.push_back(bench.path);
    AcquireOptions opts;
    opts.max_inflight = frontier->max_inflight();
    const auto dest = traces_path(run_dir, bench.name);
    fs::create_directories(dest.parent_path());
    AcquireResult result;
    try {
      result = acquire_traces(items, *frontier, opts);
    } catch (const PartialResultsError& e) {
      write_jsonl(dest, e.partial().traces);
      out(log) << bench.name << ": aborted after " << e.partial().traces.size()
               << " traces; partial results written to " << dest.string() << "\n";
      throw;
    }
    write_jsonl(dest, result.traces);
    outputs.push_back(fs::relative(dest, run_dir).generic_string());
    out(log) << bench.name << ": " << result.traces.size() << " traces, " << result.dropped.size()
             << " dropped\n";
    for (const auto& id : result.dropped) out(log) << "  dropped " << id << "\n";
    summary.traced += result.traces.size();
    summary.dropped.emplace_back(bench.name, result.dropped);
  }
  record_step(run_dir, config, "trace", input_entries(config, run_dir, inputs), outputs);
  return summary;
}

// ------------------------------------------------------------------ score

ScoreSummary cmd_score(const RunConfig& config, const fs::path& run_dir,
                       std::vector<ProviderPtr> proxies, std::ostream* log) {
  if (config.benchmarks.empty()) fail(ErrorKind::Validation, "config lists no benchmarks");
  if (config.proxies.empty()) fail(ErrorKind::Validation, "config lists no proxies");
  if (proxies.empty()) {
    for (const auto& p : config.proxies) proxies.push_back(make_provider(p.provider, ProviderRole::Proxy));
  }
  if (proxies.size() != config.proxies.size()) {
    fail(ErrorKind::InvalidInput, "need one provider per configured proxy");
  }
  fs::create_directories(run_dir);

  const auto wants = [&](auto pred) {
    return std::any_of(config.metrics.begin(), config.metrics.end(), pred);
  };
  const bool want_reasoning = wants([](const std::string& m) { return m == "rbridge" || m == "nll"; });
  const bool want_scb = wants([](const std::string& m) { return m == "nll_scb"; });
  const bool want_gold = wants([](const std::string& m) { return m == "nll_gold" || m == "mpca"; });
  const bool want_generate = wants([](const std::string& m) { return m == "acc" || m == "ted"; });
  const bool want_options = wants(is_mc_metric);
  const bool want_traces = wants(needs_trace);

  ScoreSummary summary;
  std::vector<ScoreRecord> records;
  std::vector<ItemScore> item_scores;
  std::vector<fs::path> inputs;
  std::vector<std::string> notes;

  for (const auto& bench : config.benchmarks) {
    const auto items = read_benchmark(bench.path);
    inputs.push_back(bench.path);

    // Trace per item, or null when the item was dropped.
    std::vector<TracedExample> traces;
    std::vector<const TracedExample*> trace_of(items.size(), nullptr);
    if (want_traces) {
      const auto tpath = traces_path(run_dir, bench.name);
      if (!fs::exists(tpath)) {
        fail(ErrorKind::Data, "no traces for benchmark " + bench.name + " (run trace first): " +
                                  tpath.string());
      }
      traces = read_jsonl<TracedExample>(tpath);
      std::map<std::string, std::size_t> pos;
      for (std::size_t i = 0; i < items.size(); ++i) pos[items[i].id] = i;
      for (const auto& t : traces) {
        const auto it = pos.find(t.item_id);
        if (it == pos.end()) {
          fail(ErrorKind::Data, tpath.string() + ": trace for unknown item '" + t.item_id + "'");
        }
        if (trace_of[it->second]) fail(ErrorKind::Data, tpath.string() + ": duplicate trace '" + t.item_id + "'");
        trace_of[it->second] = &t;
      }
    }

    for (std::size_t p = 0; p < proxies.size(); ++p) {
      auto& proxy = *proxies[p];
      const auto& ck = config.proxies[p];
      std::vector<ItemWork> work(items.size());
      const auto errors = for_each_bounded(items.size(), proxy.max_inflight(), [&](std::size_t i) {
        const auto& item = items[i];
        auto& w = work[i];
        const std::string ctx = scoring_context(config, items, i);
        const TracedExample* tr = trace_of[i];
        if (want_reasoning && tr) {
          w.reasoning = proxy.proxy_token_nlls(ctx, build_label(LabelVariant::Reasoning, item, tr));
        }
        if (want_scb && tr) {
          w.scb = nll_values(proxy.proxy_token_nlls(
              ctx, build_label(LabelVariant::ScB, item, tr, config.scb_suffix_template)));
        }
        if (want_gold) {
          w.gold = nll_values(proxy.proxy_token_nlls(ctx, build_label(LabelVariant::DatasetGold, item, nullptr)));
        }
        if (want_generate) {
          w.generated = proxy.proxy_generate(ctx, config.generate_max_tokens, config.generate_stop);
        }
        if (want_options && item.options) {
          for (const auto& opt : *item.options) {
            const auto nlls = nll_values(proxy.proxy_token_nlls(ctx, opt));
            w.option_sums.push_back(sum_of(nlls));
            w.option_lengths.push_back(std::max<std::size_t>(1, nlls.size()));
          }
        }
      });
      rethrow_first(errors);

      // rBridge per traced item through the batch kernel.
      std::vector<kernels::ScoreJob> jobs;
      std::vector<std::size_t> job_item;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (trace_of[i] && !work[i].reasoning.empty()) {
          jobs.push_back({trace_of[i], work[i].reasoning});
          job_item.push_back(i);
        }
      }
      std::vector<WeightedScore> weighted;
      if (wants([](const std::string& m) { return m == "rbridge"; })) {
        weighted = kernels::score_traces_parallel(jobs);
        for (std::size_t j = 0; j < jobs.size(); ++j) {
          item_scores.push_back({bench.name, ck.dataset, ck.checkpoint_tokens, items[job_item[j]].id,
                                 weighted[j].value, static_cast<std::int64_t>(jobs[j].nlls.size())});
        }
      }

      for (const auto& metric : config.metrics) {
        std::vector<double> per_item;
        if (metric == "rbridge") {
          for (const auto& s : weighted) per_item.push_back(s.value);
        } else if (metric == "nll") {
          for (const auto& job : jobs) per_item.push_back(plain_nll(job.nlls));
        } else if (metric == "nll_scb") {
          for (std::size_t i = 0; i < items.size(); ++i) {
            if (!work[i].scb.empty()) per_item.push_back(plain_nll(work[i].scb));
          }
        } else if (metric == "nll_gold") {
          for (const auto& w : work) per_item.push_back(plain_nll(w.gold));
        } else if (metric == "mpca") {
          for (const auto& w : work) per_item.push_back(mpca(w.gold));
        } else if (metric == "acc") {
          for (std::size_t i = 0; i < items.size(); ++i) {
            per_item.push_back(accuracy(extract_answer(work[i].generated), items[i].gold_answer));
          }
        } else if (metric == "ted") {
          for (std::size_t i = 0; i < items.size(); ++i) {
            const auto gen = whitespace_tokens(extract_answer(work[i].generated));
            const auto gold = whitespace_tokens(items[i].gold_answer);
            per_item.push_back(static_cast<double>(ted(gen, gold)));
          }
        } else if (is_mc_metric(metric)) {
          for (std::size_t i = 0; i < items.size(); ++i) {
            if (!items[i].options) continue;
            const auto mc = mc_metrics(work[i].option_sums, *items[i].correct_option_index,
                                       work[i].option_lengths);
            per_item.push_back(metric == "correct_prob"        ? mc.correct_prob
                               : metric == "norm_correct_prob" ? mc.norm_correct_prob
                               : metric == "total_prob"        ? mc.total_prob
                               : metric == "margin"            ? mc.margin
                                                               : mc.cf_accuracy);
          }
        }
        if (per_item.empty()) {
          const std::string note = bench.name + "/" + ck.dataset + "@" +
                                   std::to_string(ck.checkpoint_tokens) + ": no items for metric " + metric;
          if (std::find(notes.begin(), notes.end(), note) == notes.end()) notes.push_back(note);
          continue;
        }
        records.push_back({bench.name, ck.dataset, ck.checkpoint_tokens, metric,
                           benchmark_aggregate(per_item, config.aggregate), metric_orientation(metric)});
      }
    }
  }

  write_jsonl(run_dir / "scores.jsonl", records);
  std::vector<std::string> outputs{"scores.jsonl"};
  if (!item_scores.empty()) {
    write_jsonl(run_dir / "rbridge_items.jsonl", item_scores);
    outputs.push_back("rbridge_items.jsonl");
  }
  for (const auto& n : notes) out(log) << "note: " << n << "\n";
  out(log) << "scores: " << records.size() << " records\n";
  record_step(run_dir, config, "score", input_entries(config, run_dir, inputs), outputs);
  summary.records = records.size();
  summary.notes = std::move(notes);
  return summary;
}

// -------------------------------------------------------------------- fit

json cmd_fit(const RunConfig& config, const fs::path& run_dir, const FitPaths& paths, std::ostream* log) {
  const fs::path scores_path = paths.scores.value_or(run_dir / "scores.jsonl");
  const fs::path targets_path = require_targets(config, paths.targets);
  const auto proxy = read_jsonl<ScoreRecord>(scores_path);
  const auto target = read_jsonl<ScoreRecord>(targets_path);
  if (proxy.empty()) fail(ErrorKind::Data, scores_path.string() + ": no score records");
  const std::string dataset = resolve_fit_dataset(config, proxy);
  const auto proxy_idx = index_records(proxy, scores_path);
  const auto target_idx = index_records(target, targets_path);

  json rows = json::array();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_metric;
  for (const auto& bench : benchmark_order(config, proxy)) {
    std::map<std::int64_t, double> target_at;
    for (const auto& [key, v] : target_idx) {
      if (key.first == SeriesKey{bench, dataset, config.target_metric}) target_at[key.second] = v;
    }
    for (const auto& metric : config.metrics) {
      std::vector<FitPoint> points;
      std::set<std::int64_t> proxy_ckpts;
      for (const auto& [key, v] : proxy_idx) {
        if (key.first != SeriesKey{bench, dataset, metric}) continue;
        proxy_ckpts.insert(key.second);
        const auto t = target_at.find(key.second);
        if (t == target_at.end()) {
          fail(ErrorKind::Data, "benchmark " + bench + ": no target " + config.target_metric +
                                    " score at checkpoint_tokens " + std::to_string(key.second));
        }
        points.push_back({v, t->second, key.second});
      }
      if (points.empty()) continue;
      for (const auto& [ckpt, v] : target_at) {
        if (!proxy_ckpts.count(ckpt)) {
          fail(ErrorKind::Data, "benchmark " + bench + ": no proxy " + metric +
                                    " score at checkpoint_tokens " + std::to_string(ckpt));
        }
      }
      const FitReport report = kfold_cv(points, config.k);
      json folds = json::array();
      for (const auto& f : report.folds) {
        json test = json::array();
        for (auto i : f.test_indices) test.push_back(points[i].checkpoint_tokens);
        folds.push_back({{"curve", curve_json(f.curve)}, {"test_checkpoints", test}, {"test_mae", f.test_mae}});
      }
      json pts = json::array();
      for (std::size_t i = 0; i < points.size(); ++i) {
        pts.push_back({{"checkpoint_tokens", points[i].checkpoint_tokens},
                       {"x", points[i].x},
                       {"y", points[i].y},
                       {"fold", report.fold_assignment[i]}});
      }
      rows.push_back({{"benchmark", bench},
                      {"metric", metric},
                      {"orientation", metric_orientation(metric)},
                      {"points", pts},
                      {"folds", folds},
                      {"avg_train_r2", report.avg_train_r2},
                      {"avg_test_mae", report.avg_test_mae},
                      {"final_curve", curve_json(report.final_curve)}});
      per_metric[metric].first.push_back(report.avg_train_r2);
      per_metric[metric].second.push_back(report.avg_test_mae);
    }
  }
  if (rows.empty()) fail(ErrorKind::Data, "no proxy scores for dataset " + dataset + " to fit");

  json summary = json::array();
  for (const auto& metric : config.metrics) {
    const auto it = per_metric.find(metric);
    if (it == per_metric.end()) continue;
    summary.push_back({{"metric", metric},
                       {"benchmarks", it->second.first.size()},
                       {"avg_train_r2", benchmark_aggregate(it->second.first, Stat::Mean)},
                       {"avg_test_mae", benchmark_aggregate(it->second.second, Stat::Mean)}});
  }
  json report{{"fit_dataset", dataset}, {"target_metric", config.target_metric}, {"k", config.k},
              {"rows", rows},           {"summary", summary}};
  fs::create_directories(run_dir);
  write_json(run_dir / "fit_report.json", report);

  out(log) << "metric              avg_train_r2   avg_test_mae\n";
  for (const auto& s : summary) {
    std::string name = s["metric"].get<std::string>();
    name.resize(std::max<std::size_t>(name.size(), 18), ' ');
    out(log) << name << "  " << format_double(s["avg_train_r2"].get<double>()) << "   "
             << format_double(s["avg_test_mae"].get<double>()) << "\n";
  }
  record_step(run_dir, config, "fit", input_entries(config, run_dir, {scores_path, targets_path}),
              {"fit_report.json"});
  return report;
}

// ------------------------------------------------------------------- rank

json cmd_rank(const RunConfig& config, const fs::path& run_dir, const FitPaths& paths, std::ostream* log) {
  const fs::path scores_path = paths.scores.value_or(run_dir / "scores.jsonl");
  const fs::path targets_path = require_targets(config, paths.targets);
  const auto proxy = read_jsonl<ScoreRecord>(scores_path);
  const auto target = read_jsonl<ScoreRecord>(targets_path);
  if (proxy.empty()) fail(ErrorKind::Data, scores_path.string() + ": no score records");
  const auto proxy_idx = index_records(proxy, scores_path);
  index_records(target, targets_path);

  // Ground-truth value per (benchmark, dataset): the target metric at the
  // largest checkpoint available.
  std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, double>> truth;
  for (const auto& t : target) {
    if (t.metric != config.target_metric) continue;
    const auto key = std::make_pair(t.benchmark, t.dataset);
    const auto it = truth.find(key);
    if (it == truth.end() || t.checkpoint_tokens > it->second.first) {
      truth[key] = {t.checkpoint_tokens, t.value};
    }
  }

  std::map<std::int64_t, std::int64_t> params_at;
  for (const auto& p : config.proxies) {
    params_at[p.checkpoint_tokens] = std::max(params_at[p.checkpoint_tokens], p.params);
  }

  json rows = json::array();
  // (metric, checkpoint) -> per-benchmark dacc and defined taus
  std::map<std::pair<std::string, std::int64_t>, std::pair<std::vector<double>, std::vector<double>>> acc;
  for (const auto& bench : benchmark_order(config, proxy)) {
    for (const auto& metric : config.metrics) {
      std::map<std::int64_t, std::vector<DatasetScore>> by_ckpt;
      for (const auto& [key, v] : proxy_idx) {
        const auto& [b, d, m] = key.first;
        if (b != bench || m != metric) continue;
        const auto t = truth.find({b, d});
        if (t == truth.end()) continue;
        by_ckpt[key.second].push_back({d, v, metric_orientation(metric), t->second.second});
      }
      for (const auto& [ckpt, scores] : by_ckpt) {
        if (scores.size() < 2) continue;
        const double dacc = decision_accuracy(scores);
        json tau = nullptr;
        try {
          tau = kendall_tau(scores);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::UndefinedCorrelation) throw;
        }
        json pairs = json::array();
        for (const auto& pd : pair_decisions(scores)) {
          pairs.push_back({{"a", scores[pd.a].dataset}, {"b", scores[pd.b].dataset}, {"correct", pd.correct}});
        }
        json datasets = json::array();
        for (const auto& s : scores) {
          datasets.push_back({{"dataset", s.dataset}, {"proxy_value", s.proxy_value}, {"target_value", s.target_value}});
        }
        rows.push_back({{"benchmark", bench}, {"metric", metric}, {"checkpoint_tokens", ckpt},
                        {"datasets", datasets}, {"dacc", dacc}, {"tau", tau}, {"pairs", pairs}});
        auto& slot = acc[{metric, ckpt}];
        slot.first.push_back(dacc);
        if (!tau.is_null()) slot.second.push_back(tau.get<double>());
      }
    }
  }
  if (rows.empty()) {
    fail(ErrorKind::Data, "no checkpoint has two or more datasets with both proxy and target scores");
  }

  json averages = json::array();
  json compute = json::array();
  for (const auto& metric : config.metrics) {
    std::vector<ComputePoint> points;
    std::vector<json> entries;
    for (const auto& [key, vals] : acc) {
      if (key.first != metric) continue;
      const double dacc = benchmark_aggregate(vals.first, Stat::Mean);
      json tau = vals.second.empty() ? json(nullptr) : json(benchmark_aggregate(vals.second, Stat::Mean));
      averages.push_back({{"metric", metric}, {"checkpoint_tokens", key.second}, {"benchmarks", vals.first.size()},
                          {"dacc", dacc}, {"tau", tau}});
      const std::int64_t params = params_at.count(key.second) ? params_at[key.second] : 0;
      ComputePoint cp{params, key.second,
                      flops_estimate(static_cast<double>(params), static_cast<double>(key.second) * 1e9), dacc};
      points.push_back(cp);
    }
    const auto flags = pareto_flags(points);
    for (std::size_t i = 0; i < points.size(); ++i) {
      compute.push_back({{"metric", metric},
                         {"checkpoint_tokens", points[i].trained_tokens},
                         {"model_params", points[i].model_params},
                         {"flops", points[i].flops},
                         {"dacc", points[i].dacc},
                         {"pareto", static_cast<bool>(flags[i])}});
    }
  }

  json report{{"target_metric", config.target_metric}, {"rows", rows}, {"averages", averages},
              {"compute", compute}};
  fs::create_directories(run_dir);
  write_json(run_dir / "ranking_report.json", report);
  for (const auto& a : averages) {
    out(log) << a["metric"].get<std::string>() << " @" << a["checkpoint_tokens"].get<std::int64_t>()
             << "B: dacc " << format_double(a["dacc"].get<double>()) << ", tau "
             << (a["tau"].is_null() ? std::string("undefined") : format_double(a["tau"].get<double>())) << "\n";
  }
  record_step(run_dir, config, "rank", input_entries(config, run_dir, {scores_path, targets_path}),
              {"ranking_report.json"});
  return report;
}

// --------------------------------------------------------------- transfer

json cmd_transfer(const RunConfig& config, const fs::path& run_dir, const TransferPaths& paths,
                  std::ostream* log) {
  const fs::path fit_path = paths.fit_report.value_or(run_dir / "fit_report.json");
  if (!fs::exists(fit_path)) fail(ErrorKind::Data, "no fit report at " + fit_path.string());
  const fs::path scores_path =
      paths.scores ? *paths.scores : config.transfer_scores.value_or(run_dir / "scores.jsonl");
  std::optional<fs::path> targets_path = paths.targets ? paths.targets : config.transfer_targets;

  const json fit = read_json(fit_path);
  if (!fit.contains("rows") || !fit["rows"].is_array()) fail(ErrorKind::Data, fit_path.string() + ": no rows");
  const std::string target_metric = fit.value("target_metric", config.target_metric);
  const auto scores = read_jsonl<ScoreRecord>(scores_path);
  const auto scores_idx = index_records(scores, scores_path);
  std::map<std::tuple<std::string, std::string, std::int64_t>, double> truth;
  if (targets_path) {
    for (const auto& t : read_jsonl<ScoreRecord>(*targets_path)) {
      if (t.metric == target_metric) truth[{t.benchmark, t.dataset, t.checkpoint_tokens}] = t.value;
    }
  }

  json rows = json::array();
  std::map<std::string, std::tuple<std::vector<double>, int, int>> per_metric;  // errors, ranked, correct
  std::vector<std::string> metric_order;
  for (const auto& row : fit["rows"]) {
    const std::string bench = row.at("benchmark").get<std::string>();
    const std::string metric = row.at("metric").get<std::string>();
    FittedCurve curve;
    try {
      curve = row.at("final_curve").get<FittedCurve>();
    } catch (const json::exception& e) {
      fail(ErrorKind::Data, fit_path.string() + ": " + e.what());
    }
    if (std::find(metric_order.begin(), metric_order.end(), metric) == metric_order.end()) {
      metric_order.push_back(metric);
    }
    std::map<std::int64_t, std::vector<std::pair<std::string, double>>> by_ckpt;
    for (const auto& [key, v] : scores_idx) {
      const auto& [b, d, m] = key.first;
      if (b == bench && m == metric) by_ckpt[key.second].push_back({d, v});
    }
    for (const auto& [ckpt, entries] : by_ckpt) {
      json preds = json::array();
      std::vector<double> errs;
      std::vector<DatasetScore> ranked;
      bool all_truth = true;
      for (const auto& [dataset, x] : entries) {
        const auto tp = zero_shot_transfer(curve, x);
        json p{{"dataset", dataset}, {"proxy_value", x}, {"predicted", tp.value}, {"extrapolated", tp.extrapolated}};
        if (tp.extrapolated) {
          p["warning"] = tp.warning;
          out(log) << "warning: " << bench << "/" << metric << "/" << dataset << ": " << tp.warning << "\n";
        }
        const auto t = truth.find({bench, dataset, ckpt});
        if (t != truth.end()) {
          p["truth"] = t->second;
          p["abs_error"] = std::fabs(tp.value - t->second);
          errs.push_back(std::fabs(tp.value - t->second));
          ranked.push_back({dataset, tp.value, 1, t->second});
        } else {
          all_truth = false;
        }
        preds.push_back(std::move(p));
      }
      json r{{"benchmark", bench}, {"metric", metric}, {"checkpoint_tokens", ckpt},
             {"family", std::string(to_string(curve.family))}, {"predictions", preds}};
      auto& [all_errs, n_ranked, n_correct] = per_metric[metric];
      if (!errs.empty()) {
        r["mae"] = benchmark_aggregate(errs, Stat::Mean);
        all_errs.insert(all_errs.end(), errs.begin(), errs.end());
      }
      if (all_truth && ranked.size() >= 2) {
        const auto decisions = pair_decisions(ranked);
        const bool ok = std::all_of(decisions.begin(), decisions.end(),
                                    [](const PairDecision& d) { return d.correct; });
        r["rank_correct"] = ok;
        ++n_ranked;
        n_correct += ok ? 1 : 0;
      }
      rows.push_back(std::move(r));
    }
  }

  json averages = json::array();
  for (const auto& metric : metric_order) {
    const auto& [errs, n_ranked, n_correct] = per_metric[metric];
    json a{{"metric", metric}};
    if (!errs.empty()) a["mae"] = benchmark_aggregate(errs, Stat::Mean);
    if (n_ranked > 0) {
      a["rank_correct"] = n_correct;
      a["rank_total"] = n_ranked;
    }
    averages.push_back(std::move(a));
  }
  json report{{"fit_dataset", fit.value("fit_dataset", "")}, {"target_metric", target_metric},
              {"rows", rows}, {"averages", averages}};
  fs::create_directories(run_dir);
  write_json(run_dir / "transfer_report.json", report);
  for (const auto& a : averages) {
    out(log) << a["metric"].get<std::string>();
    if (a.contains("mae")) out(log) << ": mae " << format_double(a["mae"].get<double>());
    if (a.contains("rank_total")) {
      out(log) << ", ranked " << a["rank_correct"].get<int>() << "/" << a["rank_total"].get<int>();
    }
    out(log) << "\n";
  }
  std::vector<fs::path> inputs{fit_path, scores_path};
  if (targets_path) inputs.push_back(*targets_path);
  record_step(run_dir, config, "transfer", input_entries(config, run_dir, inputs), {"transfer_report.json"});
  return report;
}

// ----------------------------------------------------------------- report

std::vector<fs::path> cmd_report(const fs::path& run_dir, std::ostream* log) {
  const auto scores_path = run_dir / "scores.jsonl";
  const auto ranking_path = run_dir / "ranking_report.json";
  const auto fit_path = run_dir / "fit_report.json";
  const auto transfer_path = run_dir / "transfer_report.json";
  if (!fs::exists(scores_path) && !fs::exists(ranking_path) && !fs::exists(fit_path) &&
      !fs::exists(transfer_path)) {
    fail(ErrorKind::Data, "nothing to report in " + run_dir.string());
  }
  const auto csv_dir = run_dir / "csv";
  fs::create_directories(csv_dir);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& body) {
    write_text(csv_dir / name, body);
    written.push_back(csv_dir / name);
    out(log) << "wrote " << (csv_dir / name).string() << "\n";
  };

  if (fs::exists(scores_path)) {
    std::map<std::pair<std::string, std::string>, std::vector<ScoreRecord>> series;
    for (const auto& r : read_jsonl<ScoreRecord>(scores_path)) series[{r.benchmark, r.metric}].push_back(r);
    for (auto& [key, recs] : series) {
      std::sort(recs.begin(), recs.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
        return std::tie(a.dataset, a.checkpoint_tokens) < std::tie(b.dataset, b.checkpoint_tokens);
      });
      std::string body = "dataset,checkpoint_tokens,value\n";
      for (const auto& r : recs) {
        body += r.dataset + "," + std::to_string(r.checkpoint_tokens) + "," + format_double(r.value) + "\n";
      }
      emit("series_" + key.first + "_" + key.second + ".csv", body);
    }
  }
  if (fs::exists(ranking_path)) {
    const json rank = read_json(ranking_path);
    std::string body = "metric,checkpoint_tokens,model_params,flops,dacc,pareto\n";
    for (const auto& c : rank.at("compute")) {
      body += c["metric"].get<std::string>() + "," + std::to_string(c["checkpoint_tokens"].get<std::int64_t>()) +
              "," + std::to_string(c["model_params"].get<std::int64_t>()) + "," +
              format_double(c["flops"].get<double>()) + "," + format_double(c["dacc"].get<double>()) + "," +
              (c["pareto"].get<bool>() ? "1" : "0") + "\n";
    }
    emit("dacc_vs_flops.csv", body);
  }
  if (fs::exists(fit_path)) {
    const json fit = read_json(fit_path);
    std::string body = "metric,benchmarks,avg_train_r2,avg_test_mae\n";
    for (const auto& s : fit.at("summary")) {
      body += s["metric"].get<std::string>() + "," + std::to_string(s["benchmarks"].get<int>()) + "," +
              format_double(s["avg_train_r2"].get<double>()) + "," +
              format_double(s["avg_test_mae"].get<double>()) + "\n";
    }
    emit("fit_summary.csv", body);
  }
  if (fs::exists(transfer_path)) {
    const json tr = read_json(transfer_path);
    std::string body = "benchmark,metric,checkpoint_tokens,dataset,proxy_value,predicted,truth,abs_error,extrapolated\n";
    for (const auto& r : tr.at("rows")) {
      for (const auto& p : r.at("predictions")) {
        body += r["benchmark"].get<std::string>() + "," + r["metric"].get<std::string>() + "," +
                std::to_string(r["checkpoint_tokens"].get<std::int64_t>()) + "," +
                p["dataset"].get<std::string>() + "," + format_double(p["proxy_value"].get<double>()) + "," +
                format_double(p["predicted"].get<double>()) + "," +
                (p.contains("truth") ? format_double(p["truth"].get<double>()) : "") + "," +
                (p.contains("abs_error") ? format_double(p["abs_error"].get<double>()) : "") + "," +
                (p["extrapolated"].get<bool>() ? "1" : "0") + "\n";
      }
    }
    emit("transfer.csv", body);
  }
  return written;
}

}  // namespace rbridge
