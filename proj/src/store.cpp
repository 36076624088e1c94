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

#include "rbridge/store.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <set>

#include "rbridge/text.hpp"

namespace rbridge {

namespace fs = std::filesystem;

std::string canonical_dump(const json& j) { return j.dump(); }

void write_text(const fs::path& path, const std::string& contents) { write_file(path, contents); }

namespace {

// Typed access to one JSON object. Every key read is recorded (with its
// default when absent) so the caller gets the effective object back, and
// finish() rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where, ErrorKind kind)
      : j_(j), where_(std::move(where)), kind_(kind) {
    if (!j_.is_object()) bad("expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) bad("missing required key '" + key + "'");
    return j_.at(key);
  }

  std::string str(const std::string& key) { return record(key, as_string(raw(key), key)); }
  std::string str(const std::string& key, const std::string& def) {
    return record(key, has(key) ? as_string(j_.at(key), key) : def);
  }
  std::int64_t integer(const std::string& key) { return record(key, as_int(raw(key), key)); }
  std::int64_t integer(const std::string& key, std::int64_t def) {
    return record(key, has(key) ? as_int(j_.at(key), key) : def);
  }
  double number(const std::string& key) { return record(key, as_double(raw(key), key)); }
  double number(const std::string& key, double def) {
    return record(key, has(key) ? as_double(j_.at(key), key) : def);
  }
  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return record(key, def);
    const auto& v = j_.at(key);
    if (!v.is_boolean()) bad("key '" + key + "' must be a boolean");
    return record(key, v.get<bool>());
  }
  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& def) {
    if (!has(key)) return record(key, def);
    const auto& v = j_.at(key);
    if (!v.is_array()) bad("key '" + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(as_string(e, key));
    return record(key, out);
  }

  void put(const std::string& key, json value) { out_[key] = std::move(value); }

  [[noreturn]] void bad(const std::string& msg) const {
    fail(kind_, (where_.empty() ? std::string() : where_ + ": ") + msg);
  }

  json finish() {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) bad("unknown key '" + key + "'");
    }
    return out_;
  }

  const std::string& where() const { return where_; }
  ErrorKind kind() const { return kind_; }

 private:
  template <typename T>
  T record(const std::string& key, T value) {
    out_[key] = value;
    return value;
  }

  std::string as_string(const json& v, const std::string& key) const {
    if (!v.is_string()) bad("key '" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::int64_t as_int(const json& v, const std::string& key) const {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9.0e15) {
        return static_cast<std::int64_t>(d);
      }
    }
    bad("key '" + key + "' must be an integer");
  }
  double as_double(const json& v, const std::string& key) const {
    if (!v.is_number()) bad("key '" + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad("key '" + key + "' must be finite");
    return d;
  }

  const json& j_;
  std::string where_;
  ErrorKind kind_;
  std::set<std::string> seen_;
  json out_ = json::object();
};

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorKind::Data, std::string("non-finite value for ") + what);
}

}  // namespace

// ---------------------------------------------------------------- records

void to_json(json& j, const BenchmarkItem& item) {
  j = json{{"id", item.id},
           {"task", item.task_label},
           {"question", item.question},
           {"answer", item.gold_answer}};
  if (item.options) j["options"] = *item.options;
  if (item.correct_option_index) j["correct_index"] = *item.correct_option_index;
}

void from_json(const json& j, BenchmarkItem& item) {
  ObjectReader r(j, "", ErrorKind::Data);
  item.id = r.str("id");
  item.task_label = r.str("task");
  item.question = r.str("question");
  item.gold_answer = r.str("answer");
  item.options.reset();
  item.correct_option_index.reset();
  if (r.has("options")) item.options = r.strings("options", {});
  if (r.has("correct_index")) item.correct_option_index = static_cast<int>(r.integer("correct_index"));
  r.finish();
  if (item.id.empty()) r.bad("empty item id");
  try {
    validate(item);
  } catch (const Error& e) {
    fail(ErrorKind::Data, e.what());
  }
}

void to_json(json& j, const TracedExample& trace) {
  json tokens = json::array();
  for (const auto& t : trace.frontier_tokens) {
    require_finite(t.prob, "token probability");
    tokens.push_back(json::array({token_text_to_json(t.text), t.prob}));
  }
  j = json{{"item_id", trace.item_id},
           {"reasoning", trace.reasoning},
           {"final_answer", trace.final_answer},
           {"frontier_model", trace.frontier_model_id},
           {"tokens", std::move(tokens)}};
}

void from_json(const json& j, TracedExample& trace) {
  ObjectReader r(j, "", ErrorKind::Data);
  trace.item_id = r.str("item_id");
  trace.reasoning = r.str("reasoning");
  trace.final_answer = r.str("final_answer");
  trace.frontier_model_id = r.str("frontier_model");
  const json& tokens = r.raw("tokens");
  r.finish();
  if (!tokens.is_array()) r.bad("'tokens' must be an array");
  trace.frontier_tokens.clear();
  std::string joined;
  for (const auto& t : tokens) {
    if (!t.is_array() || t.size() != 2 || !t[1].is_number()) {
      r.bad("each token must be a [text, prob] pair");
    }
    FrontierToken tok{token_text_from_json(t[0]), t[1].get<double>()};
    if (!(tok.prob > 0.0 && tok.prob <= 1.0)) r.bad("token probability outside (0, 1]");
    joined += tok.text;
    trace.frontier_tokens.push_back(std::move(tok));
  }
  if (joined != trace.reasoning) r.bad("tokens do not concatenate to the reasoning text");
}

void to_json(json& j, const ScoreRecord& record) {
  require_finite(record.value, "score value");
  j = json{{"benchmark", record.benchmark},
           {"dataset", record.dataset},
           {"checkpoint_tokens", record.checkpoint_tokens},
           {"metric", record.metric},
           {"value", record.value},
           {"orientation", record.orientation}};
}

void from_json(const json& j, ScoreRecord& record) {
  ObjectReader r(j, "", ErrorKind::Data);
  record.benchmark = r.str("benchmark");
  record.dataset = r.str("dataset");
  record.checkpoint_tokens = r.integer("checkpoint_tokens");
  record.metric = r.str("metric");
  record.value = r.number("value");
  record.orientation = static_cast<int>(r.integer("orientation"));
  r.finish();
  if (record.orientation != 1 && record.orientation != -1) r.bad("orientation must be +1 or -1");
  const auto& known = known_metrics();
  if (std::find(known.begin(), known.end(), record.metric) != known.end() &&
      metric_orientation(record.metric) != record.orientation) {
    r.bad("orientation does not match metric '" + record.metric + "'");
  }
}

void to_json(json& j, const ItemScore& s) {
  require_finite(s.value, "item score");
  j = json{{"benchmark", s.benchmark},         {"dataset", s.dataset},
           {"checkpoint_tokens", s.checkpoint_tokens}, {"item_id", s.item_id},
           {"value", s.value},                 {"tokens", s.tokens}};
}

void from_json(const json& j, ItemScore& s) {
  ObjectReader r(j, "", ErrorKind::Data);
  s.benchmark = r.str("benchmark");
  s.dataset = r.str("dataset");
  s.checkpoint_tokens = r.integer("checkpoint_tokens");
  s.item_id = r.str("item_id");
  s.value = r.number("value");
  s.tokens = r.integer("tokens");
  r.finish();
}

void to_json(json& j, const FittedCurve& curve) {
  for (double c : curve.coefficients) require_finite(c, "coefficient");
  require_finite(curve.train_r2, "train_r2");
  j = json{{"family", std::string(to_string(curve.family))},
           {"coefficients", curve.coefficients},
           {"train_r2", curve.train_r2},
           {"x_min", curve.x_min},
           {"x_max", curve.x_max}};
}

void from_json(const json& j, FittedCurve& curve) {
  ObjectReader r(j, "curve", ErrorKind::Data);
  try {
    curve.family = family_from_string(r.str("family"));
  } catch (const Error& e) {
    r.bad(e.what());
  }
  const json& coeffs = r.raw("coefficients");
  curve.train_r2 = r.number("train_r2");
  curve.x_min = r.number("x_min");
  curve.x_max = r.number("x_max");
  r.finish();
  if (!coeffs.is_array() || coeffs.size() != coefficient_count(curve.family)) {
    r.bad("wrong number of coefficients for family " + std::string(to_string(curve.family)));
  }
  curve.coefficients.clear();
  for (const auto& c : coeffs) {
    if (!c.is_number()) r.bad("coefficients must be numbers");
    curve.coefficients.push_back(c.get<double>());
  }
}

std::vector<BenchmarkItem> read_benchmark(const fs::path& path) {
  auto items = read_jsonl<BenchmarkItem>(path);
  std::set<std::string> ids;
  for (const auto& item : items) {
    if (!ids.insert(item.id).second) {
      fail(ErrorKind::Data, path.string() + ": duplicate item id '" + item.id + "'");
    }
  }
  if (items.empty()) fail(ErrorKind::Data, path.string() + ": no items");
  return items;
}

// ----------------------------------------------------------------- config

namespace {

std::string mock_tokenization_name(MockTokenization t) {
  return t == MockTokenization::Byte ? "byte" : "whitespace";
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

fs::path existing_path(ObjectReader& r, const fs::path& base, const std::string& key) {
  const auto written = r.str(key);
  auto path = resolve(base, written);
  if (!fs::exists(path)) r.bad("path for '" + key + "' does not exist: " + path.string());
  return path;
}

MockBehavior parse_mock(const json& j, const std::string& where) {
  MockBehavior m;
  ObjectReader r(j, where, ErrorKind::Validation);
  const auto tok = r.str("tokenization", mock_tokenization_name(m.tokenization));
  if (tok == "whitespace") {
    m.tokenization = MockTokenization::Whitespace;
  } else if (tok == "byte") {
    m.tokenization = MockTokenization::Byte;
  } else {
    r.bad("tokenization must be 'whitespace' or 'byte'");
  }
  if (r.has("uniform_vocab")) {
    const auto v = r.integer("uniform_vocab");
    if (v < 2) r.bad("uniform_vocab must be >= 2");
    m.uniform_vocab = static_cast<int>(v);
  }
  m.nll_scale = r.number("nll_scale", m.nll_scale);
  if (!(m.nll_scale > 0.0)) r.bad("nll_scale must be positive");
  if (r.has("fixed_output")) m.fixed_output = r.str("fixed_output");
  if (r.has("fixed_logprob")) {
    m.fixed_logprob = r.number("fixed_logprob");
    if (*m.fixed_logprob > 0.0) r.bad("fixed_logprob must be <= 0");
  }
  m.logprobs = r.boolean("logprobs", m.logprobs);
  m.fail_markers = r.strings("fail_markers", m.fail_markers);
  m.fail_count = static_cast<int>(r.integer("fail_count", m.fail_count));
  if (m.fail_count < 0) r.bad("fail_count must be >= 0");
  r.finish();
  return m;
}

std::pair<ProviderConfig, json> parse_provider(const json& j, const std::string& where,
                                               const fs::path& base, int default_inflight) {
  ProviderConfig c;
  ObjectReader r(j, where, ErrorKind::Validation);
  try {
    c.kind = provider_kind_from_string(r.str("kind", "mock"));
    c.token_format = token_format_from_string(r.str("token_format", "plain"));
  } catch (const Error& e) {
    r.bad(e.what());
  }
  c.model_id = r.str("model_id", c.model_id);
  if (c.model_id.empty()) r.bad("model_id must not be empty");
  c.endpoint = r.str("endpoint", "");
  c.api_key_env = r.str("api_key_env", "");
  if (r.has("replay_path")) {
    const auto written = r.str("replay_path");
    c.replay_path = resolve(base, written).string();
    if (c.kind == ProviderKind::Replay && !fs::exists(c.replay_path)) {
      r.bad("replay file does not exist: " + c.replay_path);
    }
  } else if (c.kind == ProviderKind::Replay) {
    r.bad("replay provider needs 'replay_path'");
  }
  c.max_inflight = static_cast<int>(r.integer("max_inflight", default_inflight));
  if (c.max_inflight < 1) r.bad("max_inflight must be >= 1");
  c.timeout_s = r.number("timeout_s", c.timeout_s);
  c.retries = static_cast<int>(r.integer("retries", c.retries));
  c.backoff_s = r.number("backoff_s", c.backoff_s);
  c.max_tokens = static_cast<int>(r.integer("max_tokens", c.max_tokens));
  if (c.timeout_s <= 0.0 || c.retries < 0 || c.backoff_s < 0.0 || c.max_tokens < 1) {
    r.bad("timeout_s, retries, backoff_s and max_tokens must be positive");
  }
  c.probe = r.boolean("probe", c.probe);
  const auto seed = r.integer("seed", 0);
  if (seed < 0) r.bad("seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (c.kind == ProviderKind::Remote && c.endpoint.empty()) r.bad("remote provider needs 'endpoint'");
  json mock_raw = r.has("mock") ? r.raw("mock") : json::object();
  c.mock = parse_mock(mock_raw, where + ".mock");
  json resolved = r.finish();
  // Record the mock block with defaults applied.
  json mock_resolved = json::object();
  mock_resolved["tokenization"] = mock_tokenization_name(c.mock.tokenization);
  if (c.mock.uniform_vocab) mock_resolved["uniform_vocab"] = *c.mock.uniform_vocab;
  mock_resolved["nll_scale"] = c.mock.nll_scale;
  if (c.mock.fixed_output) mock_resolved["fixed_output"] = *c.mock.fixed_output;
  if (c.mock.fixed_logprob) mock_resolved["fixed_logprob"] = *c.mock.fixed_logprob;
  mock_resolved["logprobs"] = c.mock.logprobs;
  mock_resolved["fail_markers"] = c.mock.fail_markers;
  mock_resolved["fail_count"] = c.mock.fail_count;
  resolved["mock"] = std::move(mock_resolved);
  return {c, resolved};
}

json& walk(json& node, const std::string& segment) {
  if (node.is_array()) {
    std::size_t idx = 0;
    const auto* end = segment.data() + segment.size();
    auto [p, ec] = std::from_chars(segment.data(), end, idx);
    if (ec != std::errc{} || p != end) fail(ErrorKind::Validation, "bad array index '" + segment + "'");
    if (idx >= node.size()) fail(ErrorKind::Validation, "array index out of range: " + segment);
    return node[idx];
  }
  if (node.is_null()) node = json::object();
  if (!node.is_object()) fail(ErrorKind::Validation, "cannot descend into '" + segment + "'");
  return node[segment];
}

}  // namespace

void apply_overrides(json& raw, std::span<const std::string> overrides) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorKind::Validation, "override must look like key=value: '" + ov + "'");
    }
    const std::string key = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &raw;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const auto seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (seg.empty()) fail(ErrorKind::Validation, "empty segment in override key '" + key + "'");
      node = &walk(*node, seg);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    *node = std::move(value);
  }
}

RunConfig parse_config(const json& raw, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  ObjectReader r(raw, "config", ErrorKind::Validation);

  c.run_id = r.str("run_id", c.run_id);
  if (c.run_id.empty()) r.bad("run_id must not be empty");
  c.max_inflight = static_cast<int>(r.integer("max_inflight", c.max_inflight));
  if (c.max_inflight < 1) r.bad("max_inflight must be >= 1");

  json benchmarks = json::array();
  if (r.has("benchmarks")) {
    const json& list = r.raw("benchmarks");
    if (!list.is_array()) r.bad("'benchmarks' must be an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      ObjectReader b(list[i], "benchmarks." + std::to_string(i), ErrorKind::Validation);
      BenchmarkRef ref;
      ref.name = b.str("name");
      const bool safe = !ref.name.empty() && ref.name != "." && ref.name != ".." &&
                        std::all_of(ref.name.begin(), ref.name.end(), [](unsigned char ch) {
                          return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.';
                        });
      if (!safe) b.bad("benchmark name must be non-empty and use only [A-Za-z0-9._-]");
      if (!names.insert(ref.name).second) b.bad("duplicate benchmark name '" + ref.name + "'");
      ref.path_as_written = b.str("path");
      ref.path = resolve(base_dir, ref.path_as_written);
      if (!fs::exists(ref.path)) b.bad("benchmark file does not exist: " + ref.path.string());
      benchmarks.push_back(b.finish());
      c.benchmarks.push_back(std::move(ref));
    }
  }
  r.put("benchmarks", benchmarks);

  if (r.has("frontier")) {
    auto [cfg, resolved] = parse_provider(r.raw("frontier"), "frontier", base_dir, c.max_inflight);
    c.frontier = cfg;
    r.put("frontier", resolved);
  }

  json proxies = json::array();
  if (r.has("proxies")) {
    const json& list = r.raw("proxies");
    if (!list.is_array()) r.bad("'proxies' must be an array");
    std::set<std::pair<std::string, std::int64_t>> keys;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "proxies." + std::to_string(i);
      ObjectReader p(list[i], where, ErrorKind::Validation);
      ProxyCheckpoint ck;
      ck.dataset = p.str("dataset");
      if (ck.dataset.empty()) p.bad("dataset must not be empty");
      ck.checkpoint_tokens = p.integer("checkpoint_tokens");
      ck.params = p.integer("params", 0);
      if (ck.checkpoint_tokens < 0 || ck.params < 0) p.bad("checkpoint_tokens and params must be >= 0");
      if (!keys.insert({ck.dataset, ck.checkpoint_tokens}).second) {
        p.bad("duplicate proxy (" + ck.dataset + ", " + std::to_string(ck.checkpoint_tokens) + ")");
      }
      auto [cfg, resolved] = parse_provider(p.raw("provider"), where + ".provider", base_dir,
                                            c.max_inflight);
      ck.provider = cfg;
      p.put("provider", resolved);
      proxies.push_back(p.finish());
      c.proxies.push_back(std::move(ck));
    }
  }
  r.put("proxies", proxies);

  c.metrics = r.strings("metrics", c.metrics);
  if (c.metrics.empty()) r.bad("metrics must not be empty");
  {
    std::set<std::string> seen;
    const auto& known = known_metrics();
    for (const auto& m : c.metrics) {
      if (std::find(known.begin(), known.end(), m) == known.end()) r.bad("unknown metric '" + m + "'");
      if (!seen.insert(m).second) r.bad("duplicate metric '" + m + "'");
    }
  }
  c.k = static_cast<int>(r.integer("k", c.k));
  if (c.k < 2) r.bad("k must be >= 2");
  c.score_context_template = r.str("score_context_template", c.score_context_template);
  c.scb_suffix_template = r.str("scb_suffix_template", c.scb_suffix_template);
  c.few_shot = static_cast<int>(r.integer("few_shot", c.few_shot));
  if (c.few_shot < 0) r.bad("few_shot must be >= 0");
  try {
    c.aggregate = stat_from_string(r.str("aggregate", "mean"));
  } catch (const Error& e) {
    r.bad(e.what());
  }
  c.generate_max_tokens = static_cast<int>(r.integer("generate_max_tokens", c.generate_max_tokens));
  if (c.generate_max_tokens < 1) r.bad("generate_max_tokens must be >= 1");
  c.generate_stop = r.strings("generate_stop", c.generate_stop);
  c.target_metric = r.str("target_metric", c.target_metric);
  if (r.has("fit_dataset")) c.fit_dataset = r.str("fit_dataset");
  if (r.has("target_scores")) c.target_scores = existing_path(r, base_dir, "target_scores");
  if (r.has("transfer_scores")) c.transfer_scores = existing_path(r, base_dir, "transfer_scores");
  if (r.has("transfer_targets")) c.transfer_targets = existing_path(r, base_dir, "transfer_targets");
  if (r.has("created_at")) c.created_at = r.str("created_at");

  c.resolved = r.finish();
  return c;
}

RunConfig load_config(const fs::path& path, std::span<const std::string> overrides) {
  json raw = json::parse(read_file(path), nullptr, false);
  if (raw.is_discarded()) fail(ErrorKind::Validation, path.string() + ": not valid JSON");
  apply_overrides(raw, overrides);
  return parse_config(raw, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::string config_hash(const RunConfig& config) { return sha256_hex(canonical_dump(config.resolved)); }

// --------------------------------------------------------------- manifest

void to_json(json& j, const RunManifest& m) {
  j = json{{"run_id", m.run_id},
           {"created_at", m.created_at},
           {"config_hash", m.config_hash},
           {"tool_version", m.tool_version},
           {"frontier_model_id", m.frontier_model_id},
           {"proxy_model_ids", m.proxy_model_ids},
           {"inputs", m.inputs},
           {"outputs", m.outputs},
           {"steps", m.steps},
           {"config", m.config}};
}

void from_json(const json& j, RunManifest& m) {
  ObjectReader r(j, "manifest", ErrorKind::Data);
  m.run_id = r.str("run_id");
  m.created_at = r.str("created_at");
  m.config_hash = r.str("config_hash");
  m.tool_version = r.str("tool_version");
  m.frontier_model_id = r.str("frontier_model_id", "");
  m.proxy_model_ids = r.strings("proxy_model_ids", {});
  m.steps = r.strings("steps", {});
  auto digest_map = [&](const char* key) {
    std::map<std::string, std::string> out;
    if (!r.has(key)) return out;
    const json& obj = r.raw(key);
    if (!obj.is_object()) r.bad(std::string("'") + key + "' must be an object");
    for (const auto& [k, v] : obj.items()) {
      if (!v.is_string()) r.bad(std::string("'") + key + "' values must be strings");
      out[k] = v.get<std::string>();
    }
    return out;
  };
  m.inputs = digest_map("inputs");
  m.outputs = digest_map("outputs");
  m.config = r.has("config") ? r.raw("config") : json::object();
  r.finish();
}

std::string manifest_timestamp(const RunConfig& config) {
  if (config.created_at) return *config.created_at;
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    long long v = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    auto [p, ec] = std::from_chars(env, end, v);
    if (ec == std::errc{} && p == end) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest record_step(const fs::path& run_dir, const RunConfig& config, const std::string& step,
                        const std::vector<std::pair<std::string, fs::path>>& inputs,
                        const std::vector<std::string>& outputs) {
  const auto path = run_dir / "manifest.json";
  RunManifest m;
  if (fs::exists(path)) {
    json existing = json::parse(read_file(path), nullptr, false);
    if (existing.is_discarded()) fail(ErrorKind::Data, path.string() + ": not valid JSON");
    m = existing.get<RunManifest>();
  } else {
    m.created_at = manifest_timestamp(config);
  }
  m.run_id = config.run_id;
  m.config_hash = config_hash(config);
  m.tool_version = kToolVersion;
  m.config = config.resolved;
  m.frontier_model_id = config.frontier ? config.frontier->model_id : "";
  m.proxy_model_ids.clear();
  for (const auto& p : config.proxies) {
    if (std::find(m.proxy_model_ids.begin(), m.proxy_model_ids.end(), p.provider.model_id) ==
        m.proxy_model_ids.end()) {
      m.proxy_model_ids.push_back(p.provider.model_id);
    }
  }
  for (const auto& [name, file] : inputs) m.inputs[name] = sha256_file(file);
  for (const auto& name : outputs) m.outputs[name] = sha256_file(run_dir / name);
  if (std::find(m.steps.begin(), m.steps.end(), step) == m.steps.end()) m.steps.push_back(step);
  write_text(path, json(m).dump(2) + "\n");
  return m;
}

std::vector<std::string> verify_manifest(const fs::path& run_dir, const fs::path& input_base) {
  const auto path = run_dir / "manifest.json";
  if (!fs::exists(path)) fail(ErrorKind::Data, "no manifest in " + run_dir.string());
  const auto m = json::parse(read_file(path)).get<RunManifest>();
  std::vector<std::string> changed;
  auto check = [&](const std::string& name, const fs::path& file, const std::string& digest) {
    if (!fs::exists(file) || sha256_file(file) != digest) changed.push_back(name);
  };
  for (const auto& [name, digest] : m.inputs) check(name, resolve(input_base, name), digest);
  for (const auto& [name, digest] : m.outputs) check(name, run_dir / name, digest);
  return changed;
}

}  // namespace rbridge
