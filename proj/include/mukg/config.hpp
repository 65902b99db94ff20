// Copyright 2026 The mukg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mukg/error.hpp"
#include "mukg/evaluation.hpp"
#include "mukg/kgdata.hpp"
#include "mukg/models.hpp"
#include "mukg/parallel.hpp"
#include "mukg/random.hpp"
#include "mukg/sampling.hpp"
#include "mukg/training.hpp"

namespace mukg {

// Flat dotted-key configuration. Values are resolved in three layers
// (defaults < file < overrides), type-checked against the schema below and
// echoed back with every default spelled out.

enum class ValueType { kString, kUint, kReal, kBool, kEnum, kUintList };

struct KeySchema {
  std::string_view key;
  ValueType type;
  std::string_view fallback;  // "auto" is resolved after merging
  std::vector<std::string_view> choices = {};
};

inline const std::vector<KeySchema>& config_schema() {
  static const std::vector<KeySchema> schema = {
      {"task", ValueType::kEnum, "lp", {"lp", "ea", "et", "multi_lp"}},
      {"model", ValueType::kString, "transe"},
      {"data", ValueType::kString, ""},
      {"seed", ValueType::kUint, "0"},
      {"workers", ValueType::kUint, "auto"},
      {"train.dim", ValueType::kUint, "100"},
      {"train.rel_dim", ValueType::kUint, "0"},
      {"train.complex_dim", ValueType::kUint, "0"},
      {"train.norm", ValueType::kEnum, "l2", {"l1", "l2", "l2sq"}},
      {"train.epochs", ValueType::kUint, "100"},
      {"train.batch_size", ValueType::kUint, "1000"},
      {"train.optimizer", ValueType::kEnum, "auto", {"sgd", "adagrad", "adam"}},
      {"train.lr", ValueType::kReal, "auto"},
      {"train.parallel", ValueType::kEnum, "hogwild", {"hogwild", "sync"}},
      {"neg.strategy", ValueType::kEnum, "uniform", {"uniform", "self_adversarial", "truncated"}},
      {"neg.k", ValueType::kUint, "10"},
      {"neg.side", ValueType::kEnum, "both", {"head", "tail", "both"}},
      {"neg.truncation", ValueType::kReal, "0.1"},
      {"neg.temperature", ValueType::kReal, "1.0"},
      {"neg.refresh", ValueType::kUint, "5"},
      {"loss.kind", ValueType::kEnum, "auto", {"marginal_ranking", "limit_based", "nce_self_adversarial"}},
      {"loss.margin", ValueType::kReal, "1.0"},
      {"loss.lambda_pos", ValueType::kReal, "-1.0"},
      {"loss.lambda_neg", ValueType::kReal, "-2.0"},
      {"loss.balance", ValueType::kReal, "1.0"},
      {"loss.nce_offset", ValueType::kReal, "auto"},
      {"eval.filter", ValueType::kEnum, "train", {"none", "train", "train+valid+test"}},
      {"eval.interval", ValueType::kUint, "10"},
      {"eval.patience", ValueType::kUint, "3"},
      {"eval.hits", ValueType::kUintList, "auto"},
      {"eval.valid_max", ValueType::kUint, "0"},
      {"eval.similarity", ValueType::kEnum, "cosine", {"cosine", "inner", "euclidean", "csls"}},
      {"eval.csls_k", ValueType::kUint, "10"},
      {"eval.candidates", ValueType::kEnum, "test", {"test", "all"}},
      {"align.mode", ValueType::kEnum, "unique", {"unique", "shared"}},
      {"align.loss", ValueType::kEnum, "pair", {"pair", "margin"}},
      {"align.weight", ValueType::kReal, "5.0"},
      {"align.margin", ValueType::kReal, "1.0"},
      {"align.k", ValueType::kUint, "5"},
      {"align.bootstrap", ValueType::kUint, "0"},
      {"align.threshold", ValueType::kReal, "0.9"},
      {"data.split", ValueType::kString, ""},
      {"data.link_train", ValueType::kReal, "0.2"},
      {"data.link_valid", ValueType::kReal, "0.1"},
      {"data.triple_valid", ValueType::kReal, "0.05"},
      {"data.triple_test", ValueType::kReal, "0.05"},
      {"multi.separate_baseline", ValueType::kBool, "true"},
  };
  return schema;
}

inline const KeySchema* find_key(std::string_view key) {
  for (const auto& k : config_schema())
    if (k.key == key) return &k;
  return nullptr;
}

namespace detail {

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::vector<std::uint64_t>> parse_uint_list(std::string_view s) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = std::min(s.find(',', pos), s.size());
    const auto v = parse_uint(detail::trim(s.substr(pos, comma - pos)));
    if (!v || *v == 0) return std::nullopt;
    out.push_back(*v);
    pos = comma + 1;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

// Checks a raw string against the key's type; throws ConfigError naming the key.
inline void type_check(const KeySchema& k, const std::string& value) {
  if (value == "auto" && k.fallback == "auto") return;
  const auto bad = [&](std::string_view expected) {
    throw ConfigError("config key '" + std::string(k.key) + "' expects " + std::string(expected) + ", got '" +
                      value + "'");
  };
  switch (k.type) {
    case ValueType::kString: break;
    case ValueType::kUint:
      if (!parse_uint(value)) bad("a non-negative integer");
      break;
    case ValueType::kReal:
      if (!parse_real(value)) bad("a number");
      break;
    case ValueType::kBool:
      if (value != "true" && value != "false") bad("true or false");
      break;
    case ValueType::kEnum: {
      bool ok = false;
      for (auto c : k.choices) ok = ok || c == value;
      if (!ok) {
        std::string list;
        for (auto c : k.choices) list += (list.empty() ? "" : "|") + std::string(c);
        bad("one of " + list);
      }
      break;
    }
    case ValueType::kUintList:
      if (!parse_uint_list(value)) bad("a comma-separated list of positive integers");
      break;
  }
}

inline std::string json_scalar_to_string(const std::string& key, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned() || v.is_number_integer() || v.is_number_float()) return v.dump();
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x.dump();
    return s;
  }
  throw ConfigError("config key '" + key + "' has an unsupported JSON value");
}

}  // namespace detail

using ConfigMap = std::map<std::string, std::string>;

// "key = value" lines; '#' starts a comment. A JSON object (such as an
// emitted config.json) is also accepted.
inline ConfigMap parse_config_text(const std::string& text, const std::string& source = "<config>") {
  ConfigMap out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(source + ": invalid JSON config: " + e.what());
    }
    if (!j.is_object()) throw ConfigError(source + ": JSON config must be an object");
    for (const auto& [k, v] : j.items()) out[k] = detail::json_scalar_to_string(k, v);
    return out;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key(detail::trim(s.substr(0, eq)));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    out[key] = std::string(detail::trim(s.substr(eq + 1)));
  }
  return out;
}

inline ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

// "key=value" command-line overrides.
inline std::pair<std::string, std::string> parse_override(std::string_view arg) {
  const auto eq = arg.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("override '" + std::string(arg) + "' is not key=value");
  return {std::string(detail::trim(arg.substr(0, eq))), std::string(detail::trim(arg.substr(eq + 1)))};
}

struct TaskSpec {
  std::string task = "lp";
  std::string model = "transe";  // may carry an "-et" suffix for typing
  std::string data;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  ModelConfig model_config;
  TrainConfig train;
  std::size_t epochs = 100;

  std::string filter = "train";
  std::size_t eval_interval = 10;
  std::size_t patience = 3;
  std::size_t valid_max = 0;  // validation queries per check; 0 = all
  std::vector<std::size_t> hits;
  SimilarityKind similarity = SimilarityKind::kCosine;
  std::size_t csls_k = 10;
  bool all_candidates = false;

  IdMode align_mode = IdMode::kUnique;
  AlignLossKind align_loss = AlignLossKind::kPair;
  double align_weight = 5.0;
  double align_margin = 1.0;
  std::size_t align_k = 5;
  std::size_t bootstrap_interval = 0;
  double bootstrap_threshold = 0.9;

  TwoKgOptions two_kg;
  bool separate_baseline = true;

  ConfigMap resolved;  // every key, defaults made explicit
  std::uint64_t digest = 0;

  nlohmann::json to_json() const;
};

namespace detail {

inline std::string base_model_name(const std::string& model) {
  constexpr std::string_view suffix = "-et";
  if (model.size() > suffix.size() && model.ends_with(suffix)) return model.substr(0, model.size() - suffix.size());
  return model;
}

}  // namespace detail

// Task/model compatibility. "-et" variants exist only for TransE, RESCAL and
// HolE and only make sense for typing.
inline void check_task_model(const std::string& task, const std::string& model) {
  const std::string base = detail::base_model_name(model);
  if (!parse_model_kind(base)) throw ConfigError("unknown model '" + model + "'");
  if (base != model) {
    if (task != "et")
      throw ConfigError("model '" + model + "' is an entity-typing variant and cannot run task '" + task + "'");
    if (base != "transe" && base != "rescal" && base != "hole")
      throw ConfigError("model '" + model + "': typing variants exist for transe, rescal and hole only");
  }
}

inline OptimizerKind default_optimizer(ModelKind k) {
  return is_translational(k) ? OptimizerKind::kAdagrad : OptimizerKind::kAdam;
}

inline nlohmann::json TaskSpec::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : resolved) {
    const auto* k = find_key(key);
    switch (k->type) {
      case ValueType::kUint: j[key] = *detail::parse_uint(value); break;
      case ValueType::kReal: j[key] = *detail::parse_real(value); break;
      case ValueType::kBool: j[key] = value == "true"; break;
      case ValueType::kUintList: j[key] = *detail::parse_uint_list(value); break;
      default: j[key] = value;
    }
  }
  return j;
}

inline std::string format_real(double v) {
  return nlohmann::json(v).dump();
}

// Merges the layers, type-checks every key, fills "auto" values and builds
// the typed spec. Unknown keys are rejected by name.
inline TaskSpec resolve_config(const ConfigMap& file, const ConfigMap& overrides) {
  ConfigMap m;
  for (const auto& k : config_schema()) m[std::string(k.key)] = std::string(k.fallback);
  for (const auto* layer : {&file, &overrides}) {
    for (const auto& [key, value] : *layer) {
      const auto* k = find_key(key);
      if (!k) throw ConfigError("unknown config key '" + key + "'");
      detail::type_check(*k, value);
      m[key] = value;
    }
  }

  TaskSpec s;
  s.task = m["task"];
  s.model = m["model"];
  check_task_model(s.task, s.model);
  s.data = m["data"];
  s.seed = *detail::parse_uint(m["seed"]);
  if (m["workers"] == "auto") m["workers"] = std::to_string(default_workers());
  s.workers = *detail::parse_uint(m["workers"]);
  if (s.workers < 1) throw ConfigError("config key 'workers' must be at least 1");

  auto& mc = s.model_config;
  mc.kind = *parse_model_kind(detail::base_model_name(s.model));
  mc.norm = *parse_norm(m["train.norm"]);
  mc.dims.dim = *detail::parse_uint(m["train.dim"]);
  mc.dims.rel_dim = *detail::parse_uint(m["train.rel_dim"]);
  mc.dims.complex_dim = *detail::parse_uint(m["train.complex_dim"]);
  try {
    check_dims(mc);
  } catch (const Error& e) {
    throw ConfigError(std::string("config key 'train.dim': ") + e.what());
  }

  auto& t = s.train;
  t.model = mc;
  t.seed = s.seed;
  t.workers = s.workers;
  if (m["train.optimizer"] == "auto") m["train.optimizer"] = std::string(to_string(default_optimizer(mc.kind)));
  t.optimizer = *parse_optimizer_kind(m["train.optimizer"]);
  if (m["train.lr"] == "auto") m["train.lr"] = format_real(default_learning_rate(t.optimizer));
  t.lr = *detail::parse_real(m["train.lr"]);
  t.batch_size = *detail::parse_uint(m["train.batch_size"]);
  t.parallel = m["train.parallel"] == "sync" ? ParallelMode::kSync : ParallelMode::kHogwild;
  s.epochs = *detail::parse_uint(m["train.epochs"]);

  auto& n = t.neg;
  const auto& strategy = m["neg.strategy"];
  n.strategy = strategy == "uniform" ? NegStrategy::kUniform
               : strategy == "truncated" ? NegStrategy::kTruncated
                                         : NegStrategy::kSelfAdversarial;
  n.k = *detail::parse_uint(m["neg.k"]);
  const auto& side = m["neg.side"];
  n.side = side == "head" ? CorruptSide::kHead : side == "tail" ? CorruptSide::kTail : CorruptSide::kBoth;
  n.truncation = *detail::parse_real(m["neg.truncation"]);
  n.temperature = *detail::parse_real(m["neg.temperature"]);
  n.refresh_epochs = *detail::parse_uint(m["neg.refresh"]);

  auto& l = t.loss;
  if (m["loss.kind"] == "auto")
    m["loss.kind"] = n.strategy == NegStrategy::kSelfAdversarial ? "nce_self_adversarial" : "marginal_ranking";
  l.kind = *parse_loss_kind(m["loss.kind"]);
  l.margin = *detail::parse_real(m["loss.margin"]);
  l.lambda_pos = *detail::parse_real(m["loss.lambda_pos"]);
  l.lambda_neg = *detail::parse_real(m["loss.lambda_neg"]);
  l.balance = *detail::parse_real(m["loss.balance"]);
  if (m["loss.nce_offset"] == "auto") m["loss.nce_offset"] = m["loss.margin"];
  l.nce_offset = *detail::parse_real(m["loss.nce_offset"]);

  s.filter = m["eval.filter"];
  s.eval_interval = *detail::parse_uint(m["eval.interval"]);
  s.patience = *detail::parse_uint(m["eval.patience"]);
  s.valid_max = *detail::parse_uint(m["eval.valid_max"]);
  if (m["eval.hits"] == "auto") m["eval.hits"] = s.task == "ea" ? "1,5,10" : "1,3,10";
  const auto hits = detail::parse_uint_list(m["eval.hits"]);
  s.hits.assign(hits->begin(), hits->end());
  s.similarity = *parse_similarity(m["eval.similarity"]);
  s.csls_k = *detail::parse_uint(m["eval.csls_k"]);
  s.all_candidates = m["eval.candidates"] == "all";
  if (s.eval_interval < 1) throw ConfigError("config key 'eval.interval' must be at least 1");
  if (s.csls_k < 1) throw ConfigError("config key 'eval.csls_k' must be at least 1");

  s.align_mode = m["align.mode"] == "shared" ? IdMode::kShared : IdMode::kUnique;
  s.align_loss = m["align.loss"] == "margin" ? AlignLossKind::kMargin : AlignLossKind::kPair;
  s.align_weight = *detail::parse_real(m["align.weight"]);
  s.align_margin = *detail::parse_real(m["align.margin"]);
  s.align_k = *detail::parse_uint(m["align.k"]);
  s.bootstrap_interval = *detail::parse_uint(m["align.bootstrap"]);
  s.bootstrap_threshold = *detail::parse_real(m["align.threshold"]);
  if (s.align_weight < 0.0) throw ConfigError("config key 'align.weight' must be non-negative");

  s.two_kg.id_mode = s.task == "multi_lp" ? IdMode::kShared : s.align_mode;
  s.two_kg.split_folder = m["data.split"];
  s.two_kg.link_train_fraction = *detail::parse_real(m["data.link_train"]);
  s.two_kg.link_valid_fraction = *detail::parse_real(m["data.link_valid"]);
  s.two_kg.split_triples = s.task == "multi_lp";
  s.two_kg.triple_valid_fraction = *detail::parse_real(m["data.triple_valid"]);
  s.two_kg.triple_test_fraction = *detail::parse_real(m["data.triple_test"]);
  s.two_kg.seed = s.seed;
  s.separate_baseline = m["multi.separate_baseline"] == "true";

  try {
    t.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  s.resolved = std::move(m);
  // Worker count does not change what a run computes in sync mode and is
  // a machine property otherwise, so it stays out of the digest.
  auto digest_json = s.to_json();
  digest_json.erase("workers");
  s.digest = fnv1a(digest_json.dump());
  return s;
}

inline TaskSpec resolve_config(const ConfigMap& overrides = {}) { return resolve_config({}, overrides); }

inline std::string hex_digest(std::uint64_t d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, d >>= 4) s[static_cast<std::size_t>(i)] = kHex[d & 0xf];
  return s;
}

}  // namespace mukg
