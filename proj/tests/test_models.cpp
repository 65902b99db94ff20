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

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "mukg/models.hpp"
#include "oracles.hpp"

namespace mukg {
namespace {

ModelParams make(ModelKind kind, std::size_t n_e, std::size_t n_r, std::size_t dim = 2, Norm norm = Norm::kL2) {
  ModelConfig c;
  c.kind = kind;
  c.norm = norm;
  c.dims.dim = dim;
  return init_params(c, n_e, n_r, 1);
}

void set_row(ModelParams& p, std::size_t table, std::size_t id, std::vector<double> v) {
  auto r = p.tables[table].row(id);
  ASSERT_EQ(r.size(), v.size());
  std::copy(v.begin(), v.end(), r.begin());
}

std::vector<ModelConfig> all_configs() {
  std::vector<ModelConfig> out;
  for (ModelKind k : kAllModelKinds) {
    if (is_translational(k)) {
      for (Norm n : {Norm::kL1, Norm::kL2, Norm::kL2Squared}) out.push_back(oracle::small_config(k, n));
    } else {
      out.push_back(oracle::small_config(k));
    }
  }
  return out;
}

std::string label(const ModelConfig& c) {
  return std::string(to_string(c.kind)) + (is_translational(c.kind) ? "/" + std::string(to_string(c.norm)) : "");
}

TEST(Score, TransEExactTranslationIsZero) {
  auto p = make(ModelKind::kTransE, 2, 1);
  set_row(p, 0, 0, {1, 0});
  set_row(p, 1, 0, {0, 1});
  set_row(p, 0, 1, {1, 1});
  EXPECT_EQ(score(p, {0, 0, 1}), 0.0);
}

TEST(Score, DistMultAllOnesIsDim) {
  auto p = make(ModelKind::kDistMult, 2, 1, 7);
  for (auto& v : p.entities().data) v = 1.0;
  for (auto& v : p.relations().data) v = 1.0;
  EXPECT_DOUBLE_EQ(score(p, {0, 0, 1}), 7.0);
}

TEST(Score, HolESmallExampleMatchesDoubleLoop) {
  auto p = make(ModelKind::kHolE, 2, 1);
  set_row(p, 0, 0, {1, 2});
  set_row(p, 0, 1, {3, 4});
  set_row(p, 1, 0, {1, 0});
  const double expect = oracle::hole_score({1, 2}, {1, 0}, {3, 4});
  EXPECT_DOUBLE_EQ(expect, 11.0);
  EXPECT_DOUBLE_EQ(score(p, {0, 0, 1}), expect);
}

TEST(Score, ComplExRealPartsEqualDistMult) {
  const std::size_t d = 8;
  auto c = make(ModelKind::kComplEx, 5, 2, d);
  auto m = make(ModelKind::kDistMult, 5, 2, d / 2);
  for (std::size_t t = 0; t < 2; ++t) {
    auto& tab = c.tables[t];
    for (std::size_t i = 0; i < tab.rows; ++i) {
      auto row = tab.row(i);
      for (std::size_t k = d / 2; k < d; ++k) row[k] = 0.0;
      std::copy(row.begin(), row.begin() + d / 2, m.tables[t].row(i).begin());
    }
  }
  for (Id h = 0; h < 5; ++h)
    for (Id t = 0; t < 5; ++t) EXPECT_NEAR(score(c, {h, 1, t}), score(m, {h, 1, t}), 1e-12);
}

TEST(Score, AllKindsMatchNaiveOracle) {
  for (const auto& cfg : all_configs()) {
    auto p = init_params(cfg, 10, 3, 5);
    Rng rng = make_rng(5);
    oracle::jitter(p, rng);
    for (int i = 0; i < 50; ++i) {
      const Triple t = oracle::random_triple(rng, 10, 3);
      const double want = oracle::naive_score(p, t);
      EXPECT_NEAR(score(p, t), want, 1e-10 * std::max(1.0, std::abs(want))) << label(cfg);
    }
  }
}

TEST(Score, SymmetricModels) {
  auto dm = make(ModelKind::kDistMult, 6, 2, 8);
  auto cx = make(ModelKind::kComplEx, 6, 2, 8);
  for (std::size_t r = 0; r < 2; ++r) {
    auto row = cx.relations().row(r);
    for (std::size_t k = 4; k < 8; ++k) row[k] = 0.0;
  }
  for (Id h = 0; h < 6; ++h)
    for (Id t = 0; t < 6; ++t) {
      EXPECT_DOUBLE_EQ(score(dm, {h, 1, t}), score(dm, {t, 1, h}));
      EXPECT_NEAR(score(cx, {h, 1, t}), score(cx, {t, 1, h}), 1e-12);
    }
}

TEST(Score, HolEFourierIdentity) {
  // r·(h ⋆ t) = (1/d) Re Σ conj(R) conj(H) T with DFTs computed directly.
  const std::size_t d = 9;
  auto p = make(ModelKind::kHolE, 8, 2, d);
  Rng rng = make_rng(3);
  const auto dft = [&](std::span<const double> x) {
    std::vector<std::complex<double>> out(d);
    for (std::size_t m = 0; m < d; ++m)
      for (std::size_t k = 0; k < d; ++k)
        out[m] += x[k] * std::polar(1.0, -2.0 * std::numbers::pi * double(m * k) / double(d));
    return out;
  };
  for (int i = 0; i < 30; ++i) {
    const Triple t = oracle::random_triple(rng, 8, 2);
    const auto H = dft(p.entities().row(t.head));
    const auto T = dft(p.entities().row(t.tail));
    const auto R = dft(p.relations().row(t.relation));
    std::complex<double> s = 0.0;
    for (std::size_t m = 0; m < d; ++m) s += std::conj(R[m]) * std::conj(H[m]) * T[m];
    EXPECT_NEAR(score(p, t), s.real() / double(d), 1e-8);
  }
}

TEST(Score, SimplESwapInvariance) {
  auto p = make(ModelKind::kSimplE, 7, 3, 6);
  // q swaps the relation and inverse-relation tables so q's r is p's r⁻¹.
  auto q = p;
  std::swap(q.tables[1].data, q.tables[3].data);
  Rng rng = make_rng(8);
  for (int i = 0; i < 40; ++i) {
    const Triple t = oracle::random_triple(rng, 7, 3);
    EXPECT_NEAR(score(p, t), score(q, {t.tail, t.relation, t.head}), 1e-12);
  }
}

TEST(Score, TranslationalNeverPositive) {
  for (const auto& cfg : all_configs()) {
    if (!is_translational(cfg.kind)) continue;
    auto p = init_params(cfg, 10, 3, 2);
    Rng rng = make_rng(2);
    for (int i = 0; i < 100; ++i) EXPECT_LE(score(p, oracle::random_triple(rng, 10, 3)), 0.0) << label(cfg);
  }
}

TEST(Grad, DistMultClosedForm) {
  auto p = make(ModelKind::kDistMult, 3, 1, 4);
  const auto g = grad(p, {0, 0, 1});
  const double* gh = g.find(0, 0);
  ASSERT_NE(gh, nullptr);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_DOUBLE_EQ(gh[i], p.relations().row(0)[i] * p.entities().row(1)[i]);
  EXPECT_EQ(g.find(0, 2), nullptr);
}

TEST(Grad, TransESquaredStationaryAtTranslation) {
  auto p = make(ModelKind::kTransE, 2, 1, 2, Norm::kL2Squared);
  set_row(p, 0, 0, {1, 0});
  set_row(p, 1, 0, {0, 1});
  set_row(p, 0, 1, {1, 1});
  const auto g = grad(p, {0, 0, 1});
  for (const auto& e : g.entries())
    for (double v : g.values(e)) EXPECT_EQ(v, 0.0);
}

TEST(Grad, L1SubgradientUsesSignZeroAtZero) {
  auto p = make(ModelKind::kTransE, 2, 1, 2, Norm::kL1);
  set_row(p, 0, 0, {1, 0});
  set_row(p, 1, 0, {0, 0.5});
  set_row(p, 0, 1, {1, 1});
  const auto g = grad(p, {0, 0, 1});
  const double* gr = g.find(1, 0);
  ASSERT_NE(gr, nullptr);
  EXPECT_EQ(gr[0], 0.0);
  EXPECT_EQ(gr[1], 1.0);  // −d|x|/dx with x = −0.5
}

TEST(Grad, FiniteDifferencesAllKinds) {
  for (const auto& cfg : all_configs()) {
    const auto st = oracle::fd_score(cfg, 11, 100);
    EXPECT_GE(st.triples, 100u);
    EXPECT_LT(st.max_rel, 1e-4) << label(cfg);
  }
}

TEST(Grad, SharedHeadTailAccumulates) {
  for (const auto& cfg : all_configs()) {
    const auto st = [&] {
      auto p = init_params(cfg, 4, 2, 3);
      Rng rng = make_rng(3);
      oracle::jitter(p, rng);
      const Triple t{2, 1, 2};
      oracle::FdStats s;
      oracle::compare_fd(p, grad(p, t), [&] { return oracle::naive_score(p, t); }, 1e-5, s);
      return s;
    }();
    EXPECT_LT(st.max_rel, 1e-4) << label(cfg);
  }
}

TEST(Batched, MatchesScalarAllKinds) {
  for (const auto& cfg : all_configs()) {
    auto p = init_params(cfg, 50, 4, 9);
    Rng rng = make_rng(9);
    oracle::jitter(p, rng);
    for (Id r = 0; r < 4; ++r)
      for (Id fixed : {Id{0}, Id{17}, Id{49}}) {
        const auto tails = score_all_tails(p, fixed, r);
        const auto heads = score_all_heads(p, r, fixed);
        ASSERT_EQ(tails.size(), 50u);
        for (Id e = 0; e < 50; ++e) {
          EXPECT_NEAR(tails[e], score(p, {fixed, r, e}), 1e-10) << label(cfg);
          EXPECT_NEAR(heads[e], score(p, {e, r, fixed}), 1e-10) << label(cfg);
        }
      }
  }
}

TEST(Batched, DistMultIsMatrixVectorProduct) {
  auto p = make(ModelKind::kDistMult, 20, 2, 6);
  const auto v = score_all_tails(p, 3, 1);
  for (Id e = 0; e < 20; ++e) {
    double s = 0.0;
    for (std::size_t i = 0; i < 6; ++i)
      s += p.entities().row(e)[i] * (p.entities().row(3)[i] * p.relations().row(1)[i]);
    EXPECT_NEAR(v[e], s, 1e-12);
  }
}

TEST(Init, TranslationalRowsAreUnitNorm) {
  ModelConfig c;
  c.kind = ModelKind::kTransE;
  const auto p = init_params(c, 500, 10, 4);
  for (std::size_t e = 0; e < 500; ++e) EXPECT_NEAR(kernel::l2(p.entities().row(e)), 1.0, 1e-12);
}

TEST(Init, SameSeedSameTables) {
  for (ModelKind k : kAllModelKinds) {
    auto c = oracle::small_config(k);
    EXPECT_EQ(init_params(c, 30, 5, 42), init_params(c, 30, 5, 42));
    EXPECT_NE(init_params(c, 30, 5, 42).tables[0].data, init_params(c, 30, 5, 43).tables[0].data);
  }
}

TEST(Init, EntryMeanNearZero) {
  ModelConfig c;
  c.kind = ModelKind::kDistMult;
  c.dims.dim = 100;
  const auto p = init_params(c, 10000, 1, 6);
  const auto& v = p.entities().data;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  const double bound = 6.0 / std::sqrt(100.0);
  const double sigma = bound / std::sqrt(3.0 * double(v.size()));
  EXPECT_LT(std::abs(mean), 4.0 * sigma);
}

TEST(Init, TransHRelationsOrthogonalToNormal) {
  auto p = make(ModelKind::kTransH, 5, 4, 10);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_NEAR(kernel::l2(p.tables[2].row(r)), 1.0, 1e-12);
    EXPECT_LE(std::abs(kernel::dot(p.tables[2].row(r), p.tables[1].row(r))), 1e-12 * kernel::l2(p.tables[1].row(r)));
  }
}

TEST(Constraints, EntityRowsProjectedToUnitBall) {
  auto p = make(ModelKind::kTransE, 3, 1, 2);
  set_row(p, 0, 0, {3, 0});
  set_row(p, 0, 1, {0.3, 0.4});
  const std::vector<Id> ents{0, 1};
  apply_constraints(p, ents, {});
  EXPECT_NEAR(kernel::l2(p.entities().row(0)), 1.0, 1e-15);
  EXPECT_EQ(p.entities().row(1)[0], 0.3);
  EXPECT_EQ(p.entities().row(1)[1], 0.4);
}

TEST(Constraints, TransHProjectionIsExact) {
  auto p = make(ModelKind::kTransH, 3, 2, 16);
  Rng rng = make_rng(4);
  oracle::jitter(p, rng, 1.0);
  const std::vector<Id> rels{0, 1};
  apply_constraints(p, {}, rels);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_NEAR(kernel::l2(p.tables[2].row(r)), 1.0, 1e-12);
    EXPECT_LE(std::abs(kernel::dot(p.tables[2].row(r), p.tables[1].row(r))), 1e-12 * kernel::l2(p.tables[1].row(r)));
  }
}

TEST(Constraints, NonTranslationalUntouched) {
  auto p = make(ModelKind::kComplEx, 3, 1, 4);
  set_row(p, 0, 0, {3, 0, 0, 0});
  const auto before = p;
  const std::vector<Id> ents{0};
  apply_constraints(p, ents, {});
  EXPECT_EQ(p, before);
}

TEST(Export, BinaryRoundTrip) {
  auto p = make(ModelKind::kRotatE, 13, 2, 6);
  std::stringstream ss;
  write_embeddings_bin(ss, p.entities());
  const Table back = read_embeddings_bin(ss);
  EXPECT_EQ(back.rows, 13u);
  EXPECT_EQ(back.cols, 6u);
  EXPECT_EQ(back.data, p.entities().data);
}

TEST(Export, BinaryRejectsBadMagic) {
  std::stringstream ss("XXXX0000");
  EXPECT_THROW(read_embeddings_bin(ss), FormatError);
}

TEST(Export, TsvRoundTripsDecimals) {
  auto p = make(ModelKind::kDistMult, 4, 1, 3);
  std::stringstream ss;
  const std::vector<std::string> names{"a", "b", "c", "d"};
  write_embeddings_tsv(ss, p.entities(), names);
  std::string line;
  for (std::size_t i = 0; i < 4; ++i) {
    ASSERT_TRUE(std::getline(ss, line));
    std::istringstream ls(line);
    std::string name;
    std::getline(ls, name, '\t');
    EXPECT_EQ(name, names[i]);
    for (std::size_t k = 0; k < 3; ++k) {
      std::string cell;
      std::getline(ls, cell, '\t');
      EXPECT_EQ(std::stod(cell), p.entities().row(i)[k]);
    }
  }
}

TEST(Config, DimensionChecks) {
  ModelConfig c;
  c.kind = ModelKind::kComplEx;
  c.dims.dim = 7;
  EXPECT_THROW(init_params(c, 3, 1, 0), ConfigError);
  c.kind = ModelKind::kAnalogy;
  c.dims.dim = 8;
  c.dims.complex_dim = 3;
  EXPECT_THROW(init_params(c, 3, 1, 0), ConfigError);
}

TEST(Config, KindNamesRoundTrip) {
  for (ModelKind k : kAllModelKinds) EXPECT_EQ(parse_model_kind(to_string(k)), k);
  EXPECT_FALSE(parse_model_kind("nope"));
}

}  // namespace
}  // namespace mukg
