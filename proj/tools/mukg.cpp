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

// mukg command-line front end.
//
//   mukg train --task lp --model transe --data ./fb15k237 --dim 100 [key=value ...]
//   mukg eval --checkpoint runs/x/checkpoint.bin --filter train+valid+test
//   mukg merge --data ./dbp15k_zh --out ./joint
//   mukg export --checkpoint runs/x/checkpoint.bin --out ./emb
//   mukg compare joint/report.json separate/report.json
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mukg/config.hpp"
#include "mukg/pipelines.hpp"
#include "mukg/training.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string task;
  std::string model;
  std::string data;
  std::size_t dim = 0;
  std::string out;
  std::string checkpoint;
  std::string filter;
  std::string format = "both";
  std::vector<std::string> overrides;
  std::vector<std::string> reports;
};

mukg::TaskSpec resolve(const Options& o, const mukg::ConfigMap& base = {}) {
  mukg::ConfigMap file = base;
  if (!o.config.empty()) {
    for (auto& [k, v] : mukg::read_config_file(o.config)) file[k] = v;
  }
  mukg::ConfigMap over;
  for (const auto& s : o.overrides) over.insert_or_assign(mukg::parse_override(s).first, mukg::parse_override(s).second);
  if (!o.task.empty()) over["task"] = o.task;
  if (!o.model.empty()) over["model"] = o.model;
  if (!o.data.empty()) over["data"] = o.data;
  if (o.dim != 0) over["train.dim"] = std::to_string(o.dim);
  if (!o.filter.empty()) over["eval.filter"] = o.filter;
  return mukg::resolve_config(file, over);
}

fs::path output_dir(const Options& o, const mukg::TaskSpec& spec) {
  if (!o.out.empty()) return o.out;
  return fs::path("runs") / mukg::default_run_name(spec.digest);
}

mukg::Checkpoint read_checkpoint(const Options& o) {
  if (o.checkpoint.empty()) throw mukg::ConfigError("--checkpoint is required");
  if (!fs::is_regular_file(o.checkpoint)) throw mukg::ConfigError("checkpoint not found: " + o.checkpoint);
  return mukg::load_checkpoint(o.checkpoint);
}

int cmd_train(const Options& o) {
  const auto spec = resolve(o);
  const auto dir = output_dir(o, spec);
  const auto result = mukg::run_task(spec, dir, &std::cerr);
  std::cout << result.report.dump(2) << '\n';
  std::cerr << "run directory: " << dir.string() << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  const auto ckpt = read_checkpoint(o);
  const auto stored = mukg::parse_config_text(ckpt.config_text, o.checkpoint);
  const auto spec = resolve(o, stored);
  const auto report = mukg::evaluate_task(spec, ckpt.params);
  if (!o.out.empty()) {
    mukg::RunDir dir(o.out);
    dir.write_json("config.json", spec.to_json());
    dir.write_json("report.json", report);
    dir.commit();
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_merge(const Options& o) {
  auto spec = resolve(o, {{"task", "multi_lp"}});
  if (spec.task != "multi_lp") throw mukg::ConfigError("merge works on two-KG datasets (task multi_lp)");
  const auto ds = mukg::load_task_dataset(spec);
  const auto dir_path = output_dir(o, spec);
  mukg::RunDir dir(dir_path);
  mukg::write_merged_dataset(ds, dir);
  dir.write_json("config.json", spec.to_json());
  dir.commit();
  std::cout << nlohmann::json{{"out", dir_path.string()},
                              {"entities", ds.entity_count()},
                              {"relations", ds.relation_count()},
                              {"removed_overlap", ds.removed_overlap}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_export(const Options& o) {
  const auto ckpt = read_checkpoint(o);
  if (o.out.empty()) throw mukg::ConfigError("--out is required");
  if (o.format != "tsv" && o.format != "bin" && o.format != "both")
    throw mukg::ConfigError("--format must be tsv, bin or both");
  mukg::RunDir dir(o.out);
  for (const auto& t : ckpt.params.tables) {
    if (o.format != "bin") {
      auto out = dir.open(t.name + ".tsv");
      mukg::write_embeddings_tsv(out, t);
    }
    if (o.format != "tsv") {
      auto out = dir.open(t.name + ".bin");
      mukg::write_embeddings_bin(out, t);
    }
  }
  dir.commit();
  std::cout << o.out << '\n';
  return 0;
}

nlohmann::json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mukg::ConfigError("cannot read report " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw mukg::ConfigError(path + ": " + e.what());
  }
}

// Named ranking sections of a report: the report itself, or one per KG.
std::vector<std::pair<std::string, nlohmann::json>> sections(const nlohmann::json& r, const std::string& which) {
  std::vector<std::pair<std::string, nlohmann::json>> out;
  if (r.value("task", "") == "multi_lp") {
    if (!r.contains(which)) return out;
    for (const auto& [k, v] : r.at(which).items()) out.emplace_back(k, v);
  } else {
    out.emplace_back(r.value("task", "report"), r);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

int cmd_compare(const Options& o) {
  if (o.reports.empty() || o.reports.size() > 2) throw mukg::ConfigError("compare takes one or two report files");
  const auto a = read_report(o.reports[0]);
  std::vector<std::pair<std::string, nlohmann::json>> left = sections(a, "joint");
  std::vector<std::pair<std::string, nlohmann::json>> right;
  std::string left_name = o.reports.size() == 2 ? o.reports[0] : "joint";
  std::string right_name = o.reports.size() == 2 ? o.reports[1] : "separate";
  if (o.reports.size() == 2) {
    const auto b = read_report(o.reports[1]);
    right = sections(b, b.contains("joint") ? "joint" : "separate");
  } else {
    right = sections(a, "separate");
    if (right.empty()) throw mukg::ConfigError("report has no separate-baseline section to compare against");
  }
  std::cout << "| section | metric | " << left_name << " | " << right_name << " | ratio |\n";
  std::cout << "|---|---|---|---|---|\n";
  for (const auto& [name, l] : left) {
    const nlohmann::json* r = nullptr;
    for (const auto& [rn, rv] : right)
      if (rn == name) r = &rv;
    if (!r) continue;
    std::vector<std::pair<std::string, double>> lm;
    std::vector<std::pair<std::string, double>> rm;
    for (const auto& [k, v] : l.at("hits").items()) lm.emplace_back("Hits@" + k, v.get<double>());
    for (const auto& [k, v] : r->at("hits").items()) rm.emplace_back("Hits@" + k, v.get<double>());
    lm.emplace_back("MR", l.at("mr").get<double>());
    rm.emplace_back("MR", r->at("mr").get<double>());
    lm.emplace_back("MRR", l.at("mrr").get<double>());
    rm.emplace_back("MRR", r->at("mrr").get<double>());
    for (const auto& [metric, lv] : lm) {
      for (const auto& [rmetric, rv] : rm) {
        if (rmetric != metric) continue;
        std::cout << "| " << name << " | " << metric << " | " << fmt(lv) << " | " << fmt(rv) << " | "
                  << (rv != 0.0 ? fmt(lv / rv) : std::string("-")) << " |\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mukg: knowledge graph embedding training and evaluation"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "flat key = value config file (or an emitted config.json)");
    c->add_option("--task", o.task, "lp | ea | et | multi_lp");
    c->add_option("--model", o.model, "model kind, e.g. transe, rotate, rescal-et");
    c->add_option("--data", o.data, "dataset directory");
    c->add_option("--dim", o.dim, "embedding dimension");
    c->add_option("--filter", o.filter, "none | train | train+valid+test");
    c->add_option("overrides", o.overrides, "config overrides as key=value");
  };

  auto* train = app.add_subcommand("train", "train a model and write a run directory");
  common(train);
  train->add_option("--out", o.out, "run directory (default ./runs/<timestamp>-<digest>)");

  auto* eval = app.add_subcommand("eval", "re-evaluate a checkpoint on the test split");
  common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint.bin of a previous run")->required();
  eval->add_option("--out", o.out, "optional directory for report.json");

  auto* merge = app.add_subcommand("merge", "write the shared-id joint graph of a two-KG dataset");
  common(merge);
  merge->add_option("--out", o.out, "output dataset directory");

  auto* exp = app.add_subcommand("export", "dump every parameter table of a checkpoint");
  exp->add_option("--checkpoint", o.checkpoint, "checkpoint.bin")->required();
  exp->add_option("--out", o.out, "output directory")->required();
  exp->add_option("--format", o.format, "tsv | bin | both");

  auto* cmp = app.add_subcommand("compare", "joint-vs-separate table from report files");
  cmp->add_option("reports", o.reports, "report.json files (one multi_lp report, or two reports)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*merge) return cmd_merge(o);
    if (*exp) return cmd_export(o);
    if (*cmp) return cmd_compare(o);
  } catch (const mukg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
