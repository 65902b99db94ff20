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

// Randomized invariant sweeps shared by the unit suite and the acceptance
// binary. Each returns the number of cases and violations so callers can
// assert or report.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "mukg/evaluation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace mukg::checks {

struct Outcome {
  std::size_t cases = 0;
  std::size_t violations = 0;
  std::size_t ties = 0;        // tie events exercised (ranking checks)
  double max_error = 0.0;      // largest numeric deviation (oracle checks)
  std::string first_failure;

  bool ok() const { return cases > 0 && violations == 0; }
  void fail(const std::string& what) {
    if (violations++ == 0) first_failure = what;
  }
};

// ---------------------------------------------------------------------------
// Ranking against brute force

struct RandomKg {
  std::size_t n_entities = 30;
  std::vector<Triple> train;
  std::vector<Triple> test;
  ModelParams params;
};

// Random 30-entity KG whose parameters are multiples of 1/2, so products
// and sums are exact and ties occur.
inline RandomKg random_kg(std::uint64_t seed, ModelKind kind = ModelKind::kDistMult) {
  Rng rng = make_rng(seed, 0x4b47);
  RandomKg k;
  auto all = testing::random_triples(k.n_entities, 3, 150, rng);
  k.train.assign(all.begin(), all.begin() + 120);
  k.test.assign(all.begin() + 120, all.end());
  auto c = oracle::small_config(kind, Norm::kL1);
  c.dims.dim = 4;
  if (kind == ModelKind::kAnalogy) c.dims.complex_dim = 2;
  if (kind == ModelKind::kTransR) c.dims.rel_dim = 3;
  k.params = init_params(c, k.n_entities, 3, seed);
  for (auto& t : k.params.tables)
    for (auto& v : t.data) v = std::round(v * 2.0) / 2.0;
  return k;
}

// (tail, head) ranks per test triple by enumerating every candidate with the
// naive scorer and counting better and tied candidates.
inline std::vector<std::uint64_t> brute_ranks(const RandomKg& k, bool filtered) {
  TripleSet known(k.train.begin(), k.train.end());
  std::vector<std::uint64_t> out;
  for (const auto& t : k.test) {
    std::vector<double> tails(k.n_entities);
    std::vector<double> heads(k.n_entities);
    std::unordered_set<Id> ft;
    std::unordered_set<Id> fh;
    for (Id e = 0; e < k.n_entities; ++e) {
      tails[e] = oracle::naive_score(k.params, {t.head, t.relation, e});
      heads[e] = oracle::naive_score(k.params, {e, t.relation, t.tail});
      if (filtered && known.contains({t.head, t.relation, e})) ft.insert(e);
      if (filtered && known.contains({e, t.relation, t.tail})) fh.insert(e);
    }
    out.push_back(oracle::brute_rank(t.tail, tails, ft));
    out.push_back(oracle::brute_rank(t.head, heads, fh));
  }
  return out;
}

// Kinds whose scores are exact on half-integer parameters.
inline const std::vector<ModelKind>& exact_kinds() {
  static const std::vector<ModelKind> kinds = {ModelKind::kDistMult, ModelKind::kTransE, ModelKind::kComplEx,
                                               ModelKind::kRescal, ModelKind::kSimplE, ModelKind::kAnalogy};
  return kinds;
}

// `n_kgs` random KGs, cycling through exact_kinds(); raw and train-filtered
// evaluator ranks must equal brute force exactly.
inline Outcome ranking_oracle(std::size_t n_kgs, std::uint64_t seed) {
  Outcome o;
  for (std::size_t i = 0; i < n_kgs; ++i) {
    const ModelKind kind = exact_kinds()[i % exact_kinds().size()];
    const auto k = random_kg(seed + i, kind);
    const FilterIndex none;
    const FilterIndex train(k.train);
    for (const bool filtered : {false, true}) {
      ++o.cases;
      const auto got = link_prediction_eval(k.params, k.test, filtered ? train : none).ranks;
      if (got != brute_ranks(k, filtered))
        o.fail(std::string(to_string(kind)) + " kg " + std::to_string(i) + (filtered ? " filtered" : " raw"));
    }
    for (const auto& t : k.test) {
      const auto s = score_all_tails(k.params, t.head, t.relation);
      o.ties += static_cast<std::size_t>(std::count(s.begin(), s.end(), s[t.tail])) - 1;
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// Metric identities

// `n_sets` random ranking instances. Each draws candidate scores with ties,
// a filter set and a query batch, then checks: filtered rank ≤ raw rank per
// query, Hits@K non-decreasing in K, every Hits@K in [0, 1], Hits at the
// largest rank equals 1, and MRR ≥ 1/MR (harmonic ≤ arithmetic mean).
inline Outcome metric_identities(std::size_t n_sets, std::uint64_t seed) {
  Outcome o;
  Rng rng = make_rng(seed, 0x3e71);
  const std::vector<std::size_t> ks = {1, 2, 3, 5, 10, 20, 50, 100, 1000};
  for (std::size_t set = 0; set < n_sets; ++set) {
    ++o.cases;
    const std::size_t n_cand = 2 + uniform_index(rng, 200);
    const std::size_t levels = 1 + uniform_index(rng, 20);  // few levels force ties
    const std::size_t n_queries = 1 + uniform_index(rng, 30);
    std::vector<std::uint64_t> raw;
    std::vector<std::uint64_t> filt;
    std::vector<double> scores(n_cand);
    for (std::size_t q = 0; q < n_queries; ++q) {
      for (auto& s : scores) s = static_cast<double>(uniform_index(rng, levels));
      const Id truth = static_cast<Id>(uniform_index(rng, n_cand));
      std::vector<Id> filter;
      for (Id c = 0; c < n_cand; ++c)
        if (uniform_index(rng, 4) == 0) filter.push_back(c);
      raw.push_back(rank_entity(truth, scores));
      filt.push_back(rank_entity(truth, scores, filter));
      if (filt.back() > raw.back()) o.fail("filtered rank above raw rank in set " + std::to_string(set));
      if (raw.back() < 1 || raw.back() > n_cand) o.fail("rank out of range in set " + std::to_string(set));
    }
    for (const auto* ranks : {&raw, &filt}) {
      const auto r = aggregate(*ranks, ks);
      double prev = 0.0;
      for (std::size_t k : ks) {
        const double h = r.hits_at(k);
        if (h < prev || h < 0.0 || h > 1.0) o.fail("hits@k not monotone in set " + std::to_string(set));
        prev = h;
      }
      const auto top = *std::max_element(ranks->begin(), ranks->end());
      if (aggregate(*ranks, std::vector<std::size_t>{top}).hits_at(top) != 1.0)
        o.fail("hits at max rank below 1 in set " + std::to_string(set));
      // Equal ranks make both sides the same value computed two ways.
      if (r.mrr < (1.0 / r.mr) * (1.0 - 1e-12)) o.fail("mrr < 1/mr in set " + std::to_string(set));
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// CSLS

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.data) v = uniform_real(rng, -1, 1);
  return m;
}

inline std::vector<oracle::Vec> matrix_rows(const Matrix& m) {
  std::vector<oracle::Vec> out;
  for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
  return out;
}

// Batched CSLS against the two-loop oracle on `n` random size×size
// instances; a violation is any entry off by more than `tol`.
inline Outcome csls_oracle(std::size_t n, std::size_t size, std::uint64_t seed, double tol = 1e-10) {
  Outcome o;
  Rng rng = make_rng(seed, 0xc515);
  for (std::size_t i = 0; i < n; ++i) {
    ++o.cases;
    const std::size_t dim = 2 + uniform_index(rng, 31);
    const std::size_t kappa = 1 + uniform_index(rng, 15);
    const auto a = random_matrix(size, dim, rng);
    const auto b = random_matrix(size, dim, rng);
    const auto got = similarity_matrix(a, b, SimilarityKind::kCsls, kappa);
    const auto want = oracle::naive_csls(matrix_rows(a), matrix_rows(b), kappa);
    double worst = 0.0;
    for (std::size_t j = 0; j < want.size(); ++j) worst = std::max(worst, std::abs(got.data[j] - want[j]));
    o.max_error = std::max(o.max_error, worst);
    if (!(worst <= tol)) o.fail("instance " + std::to_string(i));
  }
  return o;
}

}  // namespace mukg::checks
