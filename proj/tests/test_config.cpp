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


#include <gtest/gtest.h>

#include <cstdlib>

#include "mukg/config.hpp"
#include "test_util.hpp"

namespace mukg {
namespace {

std::string error_of(const ConfigMap& file, const ConfigMap& overrides = {}) {
  try {
    resolve_config(file, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, EmptyGivesDocumentedDefaults) {
  const auto s = resolve_config();
  EXPECT_EQ(s.task, "lp");
  EXPECT_EQ(s.model_config.kind, ModelKind::kTransE);
  EXPECT_EQ(s.model_config.dims.dim, 100u);
  EXPECT_EQ(s.train.neg.k, 10u);
  EXPECT_EQ(s.train.loss.margin, 1.0);
  EXPECT_EQ(s.train.loss.kind, LossKind::kMarginalRanking);
  EXPECT_EQ(s.train.optimizer, OptimizerKind::kAdagrad);
  EXPECT_EQ(s.train.lr, default_learning_rate(OptimizerKind::kAdagrad));
  EXPECT_EQ(s.eval_interval, 10u);
  EXPECT_EQ(s.patience, 3u);
  EXPECT_EQ(s.hits, (std::vector<std::size_t>{1, 3, 10}));
  EXPECT_EQ(s.filter, "train");
}

TEST(Config, PerOptimizerLearningRates) {
  EXPECT_EQ(resolve_config({{"model", "complex"}}).train.lr, 0.001);
  EXPECT_EQ(resolve_config({{"model", "complex"}}).train.optimizer, OptimizerKind::kAdam);
  EXPECT_EQ(resolve_config({{"train.optimizer", "sgd"}}).train.lr, 0.01);
  EXPECT_EQ(resolve_config({{"train.optimizer", "sgd"}, {"train.lr", "0.5"}}).train.lr, 0.5);
}

TEST(Config, OverrideDim) {
  const auto [k, v] = parse_override("train.dim=200");
  EXPECT_EQ(resolve_config({{k, v}}).model_config.dims.dim, 200u);
  EXPECT_EQ(resolve_config({{k, v}}).resolved.at("train.dim"), "200");
}

TEST(Config, OverridesBeatFile) {
  const ConfigMap file{{"train.dim", "50"}, {"neg.k", "4"}};
  const auto s = resolve_config(file, {{"train.dim", "60"}});
  EXPECT_EQ(s.model_config.dims.dim, 60u);
  EXPECT_EQ(s.train.neg.k, 4u);
}

TEST(Config, UnknownKeyNamed) {
  EXPECT_NE(error_of({{"train.dimm", "5"}}).find("train.dimm"), std::string::npos);
}

TEST(Config, TypeMismatchNamed) {
  EXPECT_NE(error_of({{"train.dim", "abc"}}).find("train.dim"), std::string::npos);
  EXPECT_NE(error_of({{"loss.margin", "x"}}).find("loss.margin"), std::string::npos);
  EXPECT_NE(error_of({{"neg.side", "left"}}).find("neg.side"), std::string::npos);
  EXPECT_NE(error_of({{"eval.hits", "1,x"}}).find("eval.hits"), std::string::npos);
  EXPECT_NE(error_of({{"multi.separate_baseline", "maybe"}}).find("multi.separate_baseline"), std::string::npos);
}

TEST(Config, TaskModelConflict) {
  const auto msg = error_of({{"task", "ea"}, {"model", "rescal-et"}});
  EXPECT_NE(msg.find("rescal-et"), std::string::npos);
  EXPECT_NE(msg.find("typing"), std::string::npos);
  EXPECT_FALSE(error_of({{"task", "et"}, {"model", "distmult-et"}}).empty());
  EXPECT_FALSE(error_of({{"model", "convkb"}}).empty());
  EXPECT_EQ(resolve_config({{"task", "et"}, {"model", "rescal-et"}}).model_config.kind, ModelKind::kRescal);
}

TEST(Config, SelfAdversarialImpliesNce) {
  const auto s = resolve_config({{"neg.strategy", "self_adversarial"}});
  EXPECT_EQ(s.train.loss.kind, LossKind::kNceSelfAdversarial);
  EXPECT_EQ(*s.train.loss.nce_offset, s.train.loss.margin);
  EXPECT_FALSE(error_of({{"neg.strategy", "self_adversarial"}, {"loss.kind", "marginal_ranking"}}).empty());
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_FALSE(error_of({{"model", "complex"}, {"train.dim", "7"}}).empty());
  EXPECT_FALSE(error_of({{"neg.truncation", "0"}}).empty());
  EXPECT_FALSE(error_of({{"eval.interval", "0"}}).empty());
  EXPECT_FALSE(error_of({{"workers", "0"}}).empty());
}

TEST(Config, EaDefaults) {
  const auto s = resolve_config({{"task", "ea"}});
  EXPECT_EQ(s.hits, (std::vector<std::size_t>{1, 5, 10}));
  EXPECT_EQ(s.two_kg.id_mode, IdMode::kUnique);
  EXPECT_EQ(resolve_config({{"task", "multi_lp"}}).two_kg.id_mode, IdMode::kShared);
}

TEST(Config, TextAndJsonFormats) {
  const auto kv = parse_config_text("# comment\nmodel = distmult\n\ntrain.dim = 20  # trailing\n");
  EXPECT_EQ(kv.at("model"), "distmult");
  EXPECT_EQ(kv.at("train.dim"), "20");
  const auto js = parse_config_text(R"({"model": "distmult", "train.dim": 20, "eval.hits": [1, 10], "multi.separate_baseline": false})");
  EXPECT_EQ(js.at("train.dim"), "20");
  EXPECT_EQ(resolve_config(js).hits, (std::vector<std::size_t>{1, 10}));
  EXPECT_FALSE(resolve_config(js).separate_baseline);
  EXPECT_THROW(parse_config_text("just words\n"), ConfigError);
  EXPECT_THROW(parse_override("nokey"), ConfigError);
}

TEST(Config, ResolvedJsonRoundTripsToSameDigest) {
  const auto a = resolve_config({{"model", "rotate"}, {"neg.strategy", "self_adversarial"}, {"train.dim", "32"}});
  const auto again = resolve_config(parse_config_text(a.to_json().dump()), {});
  EXPECT_EQ(again.digest, a.digest);
  EXPECT_EQ(again.resolved, a.resolved);
  EXPECT_EQ(a.to_json()["train.dim"], 32);
  EXPECT_EQ(a.to_json()["loss.kind"], "nce_self_adversarial");
}

TEST(Config, DigestIgnoresWorkersOnly) {
  const auto a = resolve_config({{"workers", "1"}});
  EXPECT_EQ(a.digest, resolve_config({{"workers", "4"}}).digest);
  EXPECT_NE(a.digest, resolve_config({{"seed", "1"}}).digest);
  EXPECT_EQ(hex_digest(0xabc).size(), 16u);
}

TEST(Config, WorkersFromEnvironment) {
  ::setenv("MUKG_THREADS", "3", 1);
  EXPECT_EQ(resolve_config().workers, 3u);
  ::setenv("MUKG_THREADS", "junk", 1);
  EXPECT_EQ(resolve_config().workers, 1u);
  ::unsetenv("MUKG_THREADS");
  EXPECT_EQ(resolve_config().workers, 1u);
  EXPECT_EQ(resolve_config({{"workers", "2"}}).workers, 2u);
}

TEST(Config, ReadFile) {
  testing::TempDir dir;
  testing::write_file(dir / "run.cfg", "task = et\nmodel = hole-et\n");
  EXPECT_EQ(read_config_file(dir / "run.cfg").at("model"), "hole-et");
  EXPECT_THROW(read_config_file(dir / "missing.cfg"), ConfigError);
}

}  // namespace
}  // namespace mukg
