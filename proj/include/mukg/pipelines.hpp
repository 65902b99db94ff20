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

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "mukg/config.hpp"
#include "mukg/error.hpp"
#include "mukg/evaluation.hpp"
#include "mukg/kgdata.hpp"
#include "mukg/models.hpp"
#include "mukg/sampling.hpp"
#include "mukg/training.hpp"

namespace mukg {

namespace fs = std::filesystem;

// Output directory that only appears once a run succeeds. Files go to a
// hidden sibling and are renamed into place by commit(); an abandoned run
// removes its partial directory.
class RunDir {
 public:
  explicit RunDir(fs::path final_path) : final_(std::move(final_path)) {
    if (final_.empty()) throw ConfigError("output directory must not be empty");
    if (fs::exists(final_) && !(fs::is_directory(final_) && fs::is_empty(final_)))
      throw ConfigError("output directory already exists: " + final_.string());
    const auto parent = final_.has_parent_path() ? final_.parent_path() : fs::path(".");
    partial_ = parent / ("." + final_.filename().string() + ".partial");
    std::error_code ec;
    fs::remove_all(partial_, ec);
    fs::create_directories(partial_);
  }

  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  ~RunDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(partial_, ec);
    }
  }

  const fs::path& path() const { return partial_; }
  const fs::path& final_path() const { return final_; }

  std::ofstream open(const std::string& name, bool append = false) const {
    std::ofstream out(partial_ / name, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out) throw Error("cannot write " + (partial_ / name).string());
    return out;
  }

  void write_text(const std::string& name, const std::string& text) const {
    auto out = open(name);
    out << text;
  }

  void write_json(const std::string& name, const nlohmann::json& j) const { write_text(name, j.dump(2) + "\n"); }

  void append_log(const nlohmann::json& line) const {
    auto out = open("train.log.jsonl", true);
    out << line.dump() << '\n';
  }

  void commit() {
    if (fs::exists(final_)) fs::remove(final_);  // empty directory, checked above
    fs::rename(partial_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path partial_;
  bool committed_ = false;
};

struct RunContext {
  RunDir* out = nullptr;            // nothing is persisted when null
  std::ostream* progress = nullptr;  // human-readable epoch lines
};

struct PipelineResult {
  nlohmann::json report;
  ModelParams params;
  std::optional<ControllerResult> controller;
};

// ---------------------------------------------------------------------------
// Shared pieces

namespace detail {

inline void require_data_dir(const TaskSpec& spec) {
  if (spec.data.empty()) throw ConfigError("no dataset given (set 'data' or --data)");
  if (!fs::is_directory(spec.data)) throw ConfigError("dataset directory not found: " + spec.data);
}

inline EvalOptions eval_options(const TaskSpec& spec, std::vector<char> mask = {}) {
  EvalOptions o;
  o.hits = spec.hits;
  o.workers = spec.workers;
  o.filter_name = spec.filter;
  o.candidate_mask = std::move(mask);
  return o;
}

inline std::vector<char> mask_of(std::span<const Id> ids, std::size_t n) {
  std::vector<char> m(n, 0);
  for (Id e : ids) m.at(e) = 1;
  return m;
}

// Filter over the splits selected by the filter mode.
inline FilterIndex make_filter(const std::string& mode, const SplitTriples& s) {
  FilterIndex f;
  if (mode == "none") return f;
  f.add(s.train);
  if (mode == "train+valid+test") {
    f.add(s.valid);
    f.add(s.test);
  }
  return f;
}

// Deterministic subsample used to bound the cost of validation checks.
template <typename T>
std::vector<T> capped(const std::vector<T>& v, std::size_t max, std::uint64_t seed) {
  if (max == 0 || v.size() <= max) return v;
  std::vector<T> out = v;
  Rng rng = make_rng(seed, 0xa11d);
  std::shuffle(out.begin(), out.end(), rng);
  out.resize(max);
  return out;
}

inline std::vector<std::string> export_names(const MultiSourceDataset& ds) {
  std::vector<std::string> names;
  names.reserve(ds.entity_count());
  for (const auto& key : ds.entities.names())
    names.emplace_back(ds.kgs.size() == 1 ? std::string(surface_form(key)) : key);
  return names;
}

inline void persist_model(const RunContext& ctx, const ModelParams& p, const std::vector<std::string>& names) {
  if (!ctx.out) return;
  {
    auto out = ctx.out->open("embeddings.tsv");
    write_embeddings_tsv(out, p.entities(), names);
  }
  {
    auto out = ctx.out->open("embeddings.bin");
    write_embeddings_bin(out, p.entities());
  }
}

}  // namespace detail

// Trains a model, under the early-stopping controller when `validate` is
// set, logs every epoch, and stores the selected checkpoint.
inline PipelineResult train_model(const TaskSpec& spec, TrainingData data, std::size_t n_entities,
                                  std::size_t n_relations, const std::function<double(const ModelParams&)>& validate,
                                  const RunContext& ctx, const std::string& run_label = {},
                                  const std::function<void(Trainer&)>& after_epoch = {}) {
  if (data.triples.empty()) throw DataError("no training triples");
  Trainer trainer(spec.train, std::move(data), n_entities, n_relations);
  const auto log = [&](const EpochStats& s, std::optional<double> metric) {
    if (after_epoch) after_epoch(trainer);
    nlohmann::json line = {{"epoch", s.epoch}, {"loss", s.loss}, {"valid_mrr", nullptr}};
    if (metric) line["valid_mrr"] = *metric;
    if (trainer.data().alignment) line["align_loss"] = s.align_loss;
    if (!run_label.empty()) line["run"] = run_label;
    if (ctx.out) ctx.out->append_log(line);
    if (ctx.progress) {
      *ctx.progress << (run_label.empty() ? "" : run_label + " ") << "epoch " << s.epoch << " loss " << s.loss;
      if (metric) *ctx.progress << " valid_mrr " << *metric;
      *ctx.progress << " (" << std::fixed << std::setprecision(2) << s.seconds << "s)" << std::defaultfloat
                    << std::setprecision(6) << '\n';
    }
  };

  PipelineResult result;
  EarlyStopState es;
  if (validate) {
    EarlyStopConfig cfg{spec.eval_interval, spec.patience, spec.epochs};
    auto ctl = controller_run(trainer, validate, cfg, log);
    es = ctl.state;
    result.controller = std::move(ctl);
  } else {
    while (trainer.epoch() < spec.epochs) log(trainer.train_epoch(), std::nullopt);
  }
  if (ctx.out && run_label.empty()) {
    save_checkpoint(ctx.out->path() / "checkpoint.bin", make_checkpoint(trainer, spec.to_json().dump(), es));
  }
  result.params = trainer.params();
  return result;
}

// ---------------------------------------------------------------------------
// Link prediction

inline nlohmann::json evaluate_link_prediction(const TaskSpec& spec, const MultiSourceDataset& ds,
                                               const ModelParams& p) {
  const auto& split = ds.kgs.at(0).split;
  const auto report = link_prediction_eval(p, split.test, detail::make_filter(spec.filter, split),
                                           detail::eval_options(spec));
  return to_json(report);
}

inline PipelineResult run_link_prediction(const TaskSpec& spec, const MultiSourceDataset& ds,
                                          const RunContext& ctx = {}) {
  if (ds.kgs.size() != 1) throw DataError("link prediction expects a single-KG dataset");
  const auto& split = ds.kgs[0].split;
  if (split.test.empty()) throw DataError("link prediction needs test triples");
  std::function<double(const ModelParams&)> validate;
  std::vector<Triple> valid = detail::capped(split.valid, spec.valid_max, spec.seed);
  FilterIndex valid_filter(split.train);
  if (!valid.empty()) {
    validate = [&](const ModelParams& p) {
      return link_prediction_eval(p, valid, valid_filter, detail::eval_options(spec)).mrr;
    };
  }
  auto result = train_model(spec, make_training_data(split.train), ds.entity_count(), ds.relation_count(),
                            validate, ctx);
  result.report = evaluate_link_prediction(spec, ds, result.params);
  detail::persist_model(ctx, result.params, detail::export_names(ds));
  return result;
}

inline PipelineResult run_link_prediction(const TaskSpec& spec, const RunContext& ctx = {}) {
  detail::require_data_dir(spec);
  return run_link_prediction(spec, load_lp_dataset(spec.data), ctx);
}

// ---------------------------------------------------------------------------
// Entity typing

inline nlohmann::json evaluate_typing(const TaskSpec& spec, const MultiSourceDataset& ds, const ModelParams& p) {
  return to_json(typing_eval(p, *ds.types, ds.types->test, detail::eval_options(spec)));
}

// Relational triples plus train type assertions. Type slots are corrupted
// with types and instance slots with instances, matching the candidates
// typing_eval ranks.
inline TrainingData typing_training_data(const MultiSourceDataset& ds) {
  if (!ds.types) throw DataError("entity typing needs type assertions");
  TrainingData data = make_training_data(ds.all_train());
  const std::unordered_set<Id> type_set(ds.types->type_ids.begin(), ds.types->type_ids.end());
  std::vector<Id> instances;
  for (Id e = 0; e < ds.entity_count(); ++e)
    if (!type_set.contains(e)) instances.push_back(e);
  data.entity_pools = {std::move(instances), ds.types->type_ids};
  return data;
}

inline PipelineResult run_entity_typing(const TaskSpec& spec, const MultiSourceDataset& ds,
                                        const RunContext& ctx = {}) {
  if (!ds.types) throw DataError("entity typing needs type assertions");
  const auto& types = *ds.types;
  if (types.test.empty()) throw DataError("entity typing needs test assertions");
  std::function<double(const ModelParams&)> validate;
  const auto valid = detail::capped(types.valid, spec.valid_max, spec.seed);
  if (!valid.empty()) {
    validate = [&](const ModelParams& p) {
      auto opt = detail::eval_options(spec);
      opt.filter_name = "train";
      return typing_eval(p, types, valid, opt).mrr;
    };
  }
  auto result = train_model(spec, typing_training_data(ds), ds.entity_count(), ds.relation_count(), validate, ctx);
  result.report = evaluate_typing(spec, ds, result.params);
  detail::persist_model(ctx, result.params, detail::export_names(ds));
  return result;
}

inline PipelineResult run_entity_typing(const TaskSpec& spec, const RunContext& ctx = {}) {
  detail::require_data_dir(spec);
  return run_entity_typing(spec, load_typing_dataset(spec.data), ctx);
}

// ---------------------------------------------------------------------------
// Entity alignment

// Mutual nearest neighbours (cosine) between `left` and `right` whose
// similarity reaches `threshold`.
inline std::vector<std::pair<Id, Id>> mutual_nearest_pairs(const Table& emb, std::span<const Id> left,
                                                           std::span<const Id> right, double threshold) {
  std::vector<std::pair<Id, Id>> out;
  if (left.empty() || right.empty()) return out;
  const Matrix sims = similarity_matrix(gather_rows(emb, left), gather_rows(emb, right), SimilarityKind::kCosine);
  std::vector<std::size_t> best_right(left.size());
  std::vector<std::size_t> best_left(right.size(), 0);
  std::vector<double> best_left_sim(right.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < left.size(); ++i) {
    const auto row = sims.row(i);
    best_right[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (row[j] > best_left_sim[j]) {
        best_left_sim[j] = row[j];
        best_left[j] = i;
      }
    }
  }
  for (std::size_t i = 0; i < left.size(); ++i) {
    const std::size_t j = best_right[i];
    if (best_left[j] == i && sims(i, j) >= threshold) out.emplace_back(left[i], right[j]);
  }
  return out;
}

inline AlignmentEvalOptions alignment_options(const TaskSpec& spec, const MultiSourceDataset& ds) {
  AlignmentEvalOptions o;
  o.similarity = spec.similarity;
  o.csls_k = spec.csls_k;
  o.hits = spec.hits;
  if (spec.all_candidates) o.candidates = ds.kgs.at(1).entity_ids;
  return o;
}

inline nlohmann::json evaluate_alignment(const TaskSpec& spec, const MultiSourceDataset& ds, const ModelParams& p) {
  return to_json(alignment_eval(p.entities(), ds.alignment.of(Split::kTest), alignment_options(spec, ds)));
}

inline PipelineResult run_entity_alignment(const TaskSpec& spec, const MultiSourceDataset& ds,
                                           const RunContext& ctx = {}) {
  if (ds.kgs.size() != 2) throw DataError("entity alignment expects two KGs");
  const auto train_pairs = ds.alignment.of(Split::kTrain);
  if (train_pairs.empty()) throw DataError("entity alignment needs at least one train pair");
  const auto test_pairs = ds.alignment.of(Split::kTest);
  if (test_pairs.empty()) throw DataError("entity alignment needs test pairs");
  if (spec.bootstrap_interval > 0 && ds.id_mode == IdMode::kShared)
    throw ConfigError("align.bootstrap requires align.mode=unique");

  TrainingData data = make_training_data(ds.all_train());
  if (ds.id_mode == IdMode::kUnique) {
    // Corrupting a triple with the other KG's entities would push aligned
    // counterparts apart, so each KG samples negatives from itself.
    data.entity_pools = {ds.kgs[0].entity_ids, ds.kgs[1].entity_ids};
    AlignmentObjective obj;
    for (const auto& p : train_pairs) obj.pairs.emplace_back(p.left, p.right);
    obj.left_pool = ds.kgs[0].entity_ids;
    obj.right_pool = ds.kgs[1].entity_ids;
    obj.loss = spec.align_loss;
    obj.weight = spec.align_weight;
    obj.margin = spec.align_margin;
    obj.k = spec.align_k;
    data.alignment = std::move(obj);
  }

  std::function<double(const ModelParams&)> validate;
  const auto valid = detail::capped(ds.alignment.of(Split::kValid), spec.valid_max, spec.seed);
  if (!valid.empty()) {
    validate = [&](const ModelParams& p) {
      AlignmentEvalOptions o;
      o.similarity = spec.similarity;
      o.csls_k = spec.csls_k;
      return alignment_eval(p.entities(), valid, o).mrr;
    };
  }

  // Bootstrapping: gold-aligned entities never take part, so pseudo pairs
  // can neither replace nor contradict a gold seed.
  std::function<void(Trainer&)> bootstrap;
  std::unordered_set<Id> aligned;
  for (const auto& p : train_pairs) {
    aligned.insert(p.left);
    aligned.insert(p.right);
  }
  std::size_t pseudo_total = 0;
  if (spec.bootstrap_interval > 0) {
    bootstrap = [&](Trainer& t) {
      if (t.epoch() % spec.bootstrap_interval != 0) return;
      std::vector<Id> left;
      std::vector<Id> right;
      for (Id e : ds.kgs[0].entity_ids)
        if (!aligned.contains(e)) left.push_back(e);
      for (Id e : ds.kgs[1].entity_ids)
        if (!aligned.contains(e)) right.push_back(e);
      const auto found = mutual_nearest_pairs(t.params().entities(), left, right, spec.bootstrap_threshold);
      for (const auto& [a, b] : found) {
        aligned.insert(a);
        aligned.insert(b);
      }
      pseudo_total += found.size();
      if (!found.empty()) t.add_alignment_pairs(found);
    };
  }

  auto result = train_model(spec, std::move(data), ds.entity_count(), ds.relation_count(), validate, ctx, {},
                            bootstrap);
  result.report = evaluate_alignment(spec, ds, result.params);
  if (spec.bootstrap_interval > 0) result.report["pseudo_pairs"] = pseudo_total;
  detail::persist_model(ctx, result.params, detail::export_names(ds));
  return result;
}

inline PipelineResult run_entity_alignment(const TaskSpec& spec, const RunContext& ctx = {}) {
  detail::require_data_dir(spec);
  return run_entity_alignment(spec, load_two_kg_dataset(spec.data, spec.two_kg), ctx);
}

// ---------------------------------------------------------------------------
// Multi-source link prediction

// Per-KG link prediction with that KG's entities as the only candidates.
inline nlohmann::json evaluate_per_kg(const TaskSpec& spec, const MultiSourceDataset& ds, const ModelParams& p) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t k = 0; k < ds.kgs.size(); ++k) {
    const auto& part = ds.kgs[k];
    if (part.split.test.empty()) throw DataError("KG " + std::to_string(k + 1) + " has no test triples");
    const auto report = link_prediction_eval(p, part.split.test, detail::make_filter(spec.filter, part.split),
                                             detail::eval_options(spec, detail::mask_of(part.entity_ids, p.entity_count)));
    out["kg" + std::to_string(k + 1)] = to_json(report);
  }
  return out;
}

inline nlohmann::json evaluate_multisource(const TaskSpec& spec, const MultiSourceDataset& ds, const ModelParams& p) {
  return {{"task", "multi_lp"}, {"joint", evaluate_per_kg(spec, ds, p)}};
}

// Shared-id dataset with overlap removed; throws if the invariant fails.
inline MultiSourceDataset prepare_multisource(MultiSourceDataset ds) {
  if (ds.id_mode != IdMode::kShared) throw DataError("multi-source link prediction needs shared ids");
  remove_overlap_triples(ds);
  if (!overlap_free(ds)) throw Error("held-out triple present in the joint training set");
  return ds;
}

inline PipelineResult run_multisource_lp(const TaskSpec& spec, MultiSourceDataset input, const RunContext& ctx = {}) {
  const MultiSourceDataset ds = prepare_multisource(std::move(input));
  const auto validator = [&](std::span<const std::size_t> kgs) {
    std::vector<std::vector<Triple>> valid(ds.kgs.size());
    for (std::size_t k : kgs) valid[k] = detail::capped(ds.kgs[k].split.valid, spec.valid_max, spec.seed + k);
    bool any = false;
    for (const auto& v : valid) any = any || !v.empty();
    std::function<double(const ModelParams&)> fn;
    if (!any) return fn;
    fn = [&ds, &spec, valid, kgs = std::vector<std::size_t>(kgs.begin(), kgs.end())](const ModelParams& p) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t k : kgs) {
        if (valid[k].empty()) continue;
        const FilterIndex filter(ds.kgs[k].split.train);
        sum += link_prediction_eval(p, valid[k], filter,
                                    detail::eval_options(spec, detail::mask_of(ds.kgs[k].entity_ids, p.entity_count)))
                   .mrr;
        ++n;
      }
      return sum / static_cast<double>(n);
    };
    return fn;
  };

  const std::vector<std::size_t> all_kgs = {0, 1};
  auto result = train_model(spec, make_training_data(ds.all_train()), ds.entity_count(), ds.relation_count(),
                            validator(all_kgs), ctx);
  result.report = evaluate_multisource(spec, ds, result.params);
  result.report["removed_overlap"] = ds.removed_overlap;

  if (spec.separate_baseline) {
    nlohmann::json separate = nlohmann::json::object();
    for (std::size_t k = 0; k < ds.kgs.size(); ++k) {
      TrainingData data = make_training_data(ds.kgs[k].split.train);
      data.entity_pools = {ds.kgs[k].entity_ids};
      const std::vector<std::size_t> one = {k};
      auto base = train_model(spec, std::move(data), ds.entity_count(), ds.relation_count(), validator(one), ctx,
                              "separate_kg" + std::to_string(k + 1));
      const auto& part = ds.kgs[k];
      separate["kg" + std::to_string(k + 1)] = to_json(link_prediction_eval(
          base.params, part.split.test, detail::make_filter(spec.filter, part.split),
          detail::eval_options(spec, detail::mask_of(part.entity_ids, base.params.entity_count))));
    }
    result.report["separate"] = std::move(separate);
  }
  detail::persist_model(ctx, result.params, detail::export_names(ds));
  return result;
}

inline PipelineResult run_multisource_lp(const TaskSpec& spec, const RunContext& ctx = {}) {
  detail::require_data_dir(spec);
  return run_multisource_lp(spec, load_two_kg_dataset(spec.data, spec.two_kg), ctx);
}

// ---------------------------------------------------------------------------
// Dispatch

inline MultiSourceDataset load_task_dataset(const TaskSpec& spec) {
  detail::require_data_dir(spec);
  if (spec.task == "lp") return load_lp_dataset(spec.data);
  if (spec.task == "et") return load_typing_dataset(spec.data);
  if (spec.task == "ea") return load_two_kg_dataset(spec.data, spec.two_kg);
  return prepare_multisource(load_two_kg_dataset(spec.data, spec.two_kg));
}

// Runs spec.task. With an output directory, the run directory holds
// config.json, train.log.jsonl, report.json, embeddings.{tsv,bin} and
// checkpoint.bin, and exists only if the run succeeded.
inline PipelineResult run_task(const TaskSpec& spec, const std::optional<fs::path>& out_dir = std::nullopt,
                               std::ostream* progress = nullptr) {
  detail::require_data_dir(spec);
  std::unique_ptr<RunDir> dir;
  if (out_dir) dir = std::make_unique<RunDir>(*out_dir);
  RunContext ctx{dir.get(), progress};
  if (dir) {
    dir->write_json("config.json", spec.to_json());
    dir->write_text("train.log.jsonl", "");
  }
  PipelineResult result;
  if (spec.task == "lp") {
    result = run_link_prediction(spec, ctx);
  } else if (spec.task == "et") {
    result = run_entity_typing(spec, ctx);
  } else if (spec.task == "ea") {
    result = run_entity_alignment(spec, ctx);
  } else {
    result = run_multisource_lp(spec, ctx);
  }
  if (dir) {
    dir->write_json("report.json", result.report);
    dir->commit();
  }
  return result;
}

// Test-set report for stored parameters, without training.
inline nlohmann::json evaluate_task(const TaskSpec& spec, const ModelParams& p) {
  const auto ds = load_task_dataset(spec);
  if (ds.entity_count() != p.entity_count || ds.relation_count() != p.relation_count)
    throw DataError("checkpoint vocabulary does not match the dataset");
  if (spec.task == "lp") return evaluate_link_prediction(spec, ds, p);
  if (spec.task == "et") return evaluate_typing(spec, ds, p);
  if (spec.task == "ea") return evaluate_alignment(spec, ds, p);
  return evaluate_multisource(spec, ds, p);
}

// Writes the shared-id joint graph of a two-KG dataset as a single-KG
// link-prediction dataset (train/valid/test.txt) plus entity_ids.tsv mapping
// every source key to its merged id.
inline void write_merged_dataset(const MultiSourceDataset& ds, RunDir& dir) {
  const auto& names = ds.entities.names();
  const auto& rels = ds.relations.names();
  const auto write = [&](const std::string& file, auto member) {
    auto out = dir.open(file);
    TripleSet seen;
    for (const auto& part : ds.kgs)
      for (const auto& t : part.split.*member)
        if (seen.insert(t).second) out << names[t.head] << '\t' << rels[t.relation] << '\t' << names[t.tail] << '\n';
  };
  write("train.txt", &SplitTriples::train);
  write("valid.txt", &SplitTriples::valid);
  write("test.txt", &SplitTriples::test);
  std::vector<std::pair<std::string, Id>> keys(ds.entities.keys().begin(), ds.entities.keys().end());
  std::sort(keys.begin(), keys.end());
  auto out = dir.open("entity_ids.tsv");
  for (const auto& [key, id] : keys) out << key << '\t' << id << '\t' << names[id] << '\n';
}

inline std::string default_run_name(std::uint64_t digest) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return std::string(buf) + "-" + hex_digest(digest).substr(0, 8);
}

}  // namespace mukg
