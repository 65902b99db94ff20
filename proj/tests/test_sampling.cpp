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

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "mukg/sampling.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace mukg {
namespace {

std::multiset<std::tuple<Id, Id, Id>> as_multiset(const std::vector<Triple>& ts) {
  std::multiset<std::tuple<Id, Id, Id>> out;
  for (const auto& t : ts) out.insert({t.head, t.relation, t.tail});
  return out;
}

std::vector<Triple> numbered(std::size_t n) {
  std::vector<Triple> out;
  for (Id i = 0; i < n; ++i) out.push_back({i, 0, i + 1});
  return out;
}

TEST(Batches, SizesFollowBatchSize) {
  Rng rng = make_rng(1);
  const auto b = make_batches(numbered(10), 3, rng);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0].size(), 3u);
  EXPECT_EQ(b[1].size(), 3u);
  EXPECT_EQ(b[2].size(), 3u);
  EXPECT_EQ(b[3].size(), 1u);
}

TEST(Batches, LargeBatchIsSingle) {
  Rng rng = make_rng(1);
  EXPECT_EQ(make_batches(numbered(10), 10, rng).size(), 1u);
  EXPECT_EQ(make_batches(numbered(10), 99, rng).size(), 1u);
}

TEST(Batches, SameSeedSameSequence) {
  Rng a = make_rng(7);
  Rng b = make_rng(7);
  const auto ts = numbered(50);
  for (int epoch = 0; epoch < 3; ++epoch) EXPECT_EQ(make_batches(ts, 8, a), make_batches(ts, 8, b));
}

TEST(Batches, PartitionIsTheTrainingMultiset) {
  Rng rng = make_rng(2);
  auto ts = testing::random_triples(30, 4, 200, rng);
  ts.push_back(ts.front());  // duplicates survive as duplicates
  for (std::size_t bs : {1u, 7u, 64u, 500u}) {
    std::vector<Triple> joined;
    for (const auto& b : make_batches(ts, bs, rng)) joined.insert(joined.end(), b.begin(), b.end());
    EXPECT_EQ(as_multiset(joined), as_multiset(ts));
  }
}

TEST(Uniform, TwoEntityForcedCandidate) {
  Rng rng = make_rng(3);
  const TripleSet known{{0, 0, 1}};
  const auto negs = corrupt_uniform({0, 0, 1}, CorruptSide::kTail, 4, 2, known, rng);
  for (const auto& n : negs) EXPECT_EQ(n, (Triple{0, 0, 0}));
}

TEST(Uniform, ExhaustedCandidatesRaise) {
  Rng rng = make_rng(3);
  const TripleSet known{{0, 0, 1}, {0, 0, 0}};
  EXPECT_THROW(corrupt_uniform({0, 0, 1}, CorruptSide::kTail, 1, 2, known, rng), SamplingError);
  EXPECT_THROW(corrupt_uniform({0, 0, 0}, CorruptSide::kTail, 1, 1, TripleSet{}, rng), SamplingError);
}

TEST(Uniform, ReturnsExactlyK) {
  Rng rng = make_rng(4);
  EXPECT_EQ(corrupt_uniform({0, 0, 1}, CorruptSide::kBoth, 5, 10, TripleSet{}, rng).size(), 5u);
}

TEST(Uniform, ChiSquareOverMillionDraws) {
  const std::size_t n = 100;
  const std::size_t draws = 1'000'000;
  Rng rng = make_rng(5);
  const Triple pos{0, 0, 1};
  const auto negs = corrupt_uniform(pos, CorruptSide::kTail, draws, n, TripleSet{pos}, rng);
  std::vector<double> counts(n, 0.0);
  for (const auto& t : negs) counts[t.tail] += 1.0;
  EXPECT_EQ(counts[1], 0.0);
  // 99 admissible tails, df = 98.
  const double expect = double(draws) / 99.0;
  double chi2 = 0.0;
  for (std::size_t e = 0; e < n; ++e)
    if (e != 1) chi2 += (counts[e] - expect) * (counts[e] - expect) / expect;
  const double df = 98.0;
  EXPECT_LT(std::abs(chi2 - df), 3.0 * std::sqrt(2.0 * df)) << chi2;
}

TEST(Uniform, BothSidesRoughlyHalf) {
  Rng rng = make_rng(6);
  const Triple pos{0, 0, 1};
  const auto negs = corrupt_uniform(pos, CorruptSide::kBoth, 100000, 1000, TripleSet{pos}, rng);
  double heads = 0;
  for (const auto& t : negs) heads += t.head != pos.head ? 1 : 0;
  // Head draws that hit the original head count as tail-side here; both are rare.
  EXPECT_NEAR(heads / 1e5, 0.5, 0.01);
}

TEST(SelfAdversarial, EqualScoresUniform) {
  for (double alpha : {0.01, 1.0, 50.0}) {
    const auto w = self_adversarial_weights(std::vector<double>(4, -3.0), alpha);
    for (double v : w) EXPECT_DOUBLE_EQ(v, 0.25);
  }
}

TEST(SelfAdversarial, SmallAlphaTendsToUniform) {
  const std::vector<double> s{1, 5, -3};
  const auto w = self_adversarial_weights(s, 1e-9);
  for (double v : w) EXPECT_NEAR(v, 1.0 / 3.0, 1e-8);
}

TEST(SelfAdversarial, MatchesExtendedPrecision) {
  const std::vector<double> s{1, 2, 3};
  const auto w = self_adversarial_weights(s, 1.0);
  long double z = 0.0L;
  for (double x : s) z += std::exp(static_cast<long double>(x));
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(w[i], static_cast<double>(std::exp(static_cast<long double>(s[i])) / z), 1e-15);
}

TEST(SelfAdversarial, ShiftInvariantAndStable) {
  const std::vector<double> s{1000, 1001, 999.5};
  std::vector<double> shifted;
  for (double x : s) shifted.push_back(x - 1000.0);
  const auto a = self_adversarial_weights(s, 2.0);
  const auto b = self_adversarial_weights(shifted, 2.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-15);
    sum += a[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(SelfAdversarial, RejectsNonFinite) {
  const std::vector<double> s{1.0, std::nan("")};
  EXPECT_THROW(self_adversarial_weights(s, 1.0), NumericError);
  EXPECT_THROW(self_adversarial_weights(std::vector<double>{}, 1.0), NumericError);
}

Table toy_embeddings(std::size_t n, std::size_t d, std::uint64_t seed) {
  Table t{"ent", RowKey::kEntity, n, d, {}};
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < n * d; ++i) t.data.push_back(uniform_real(rng, -1, 1));
  return t;
}

// Brute-force top-s cosine neighbours of e, ties by smaller id.
std::set<Id> top_s(const Table& emb, Id e, std::size_t s) {
  std::vector<std::pair<double, Id>> sims;
  for (Id j = 0; j < emb.rows; ++j)
    if (j != e) sims.push_back({-oracle::cosine(emb.row(e), emb.row(j)), j});
  std::sort(sims.begin(), sims.end());
  std::set<Id> out;
  for (std::size_t i = 0; i < s; ++i) out.insert(sims[i].second);
  return out;
}

TEST(Truncated, CandidatesWithinBruteForceTopS) {
  const auto emb = toy_embeddings(20, 5, 8);
  const double mu = 0.2;
  const auto idx = NeighborIndex::build(emb, mu);
  ASSERT_EQ(idx.width(), 4u);
  Rng rng = make_rng(8);
  for (Id e = 0; e < 20; ++e) {
    const auto want = top_s(emb, e, 4);
    const auto got = idx.neighbors(e);
    EXPECT_EQ(std::set<Id>(got.begin(), got.end()), want);
    const Triple pos{e, 0, static_cast<Id>((e + 1) % 20)};
    for (const auto& n : corrupt_truncated(pos, CorruptSide::kTail, 50, idx, TripleSet{pos}, rng))
      EXPECT_TRUE(top_s(emb, pos.tail, 4).contains(n.tail));
  }
}

TEST(Truncated, SingleNeighbour) {
  const auto emb = toy_embeddings(20, 5, 9);
  const auto idx = NeighborIndex::build(emb, 0.05);
  ASSERT_EQ(idx.width(), 1u);
  Rng rng = make_rng(9);
  const Triple pos{3, 0, 7};
  const Id nn = *top_s(emb, 7, 1).begin();
  for (const auto& n : corrupt_truncated(pos, CorruptSide::kTail, 20, idx, TripleSet{}, rng)) EXPECT_EQ(n.tail, nn);
}

TEST(Truncated, FullRatioMatchesUniformSupport) {
  const auto emb = toy_embeddings(15, 4, 10);
  const auto idx = NeighborIndex::build(emb, 1.0);
  EXPECT_EQ(idx.width(), 14u);
  Rng rng = make_rng(10);
  const Triple pos{2, 0, 5};
  const TripleSet known{pos, {2, 0, 9}};
  std::set<Id> trunc;
  std::set<Id> uni;
  for (const auto& n : corrupt_truncated(pos, CorruptSide::kTail, 5000, idx, known, rng)) trunc.insert(n.tail);
  for (const auto& n : corrupt_uniform(pos, CorruptSide::kTail, 5000, 15, known, rng)) uni.insert(n.tail);
  EXPECT_EQ(trunc, uni);
  EXPECT_EQ(trunc.size(), 13u);
}

TEST(Truncated, StaleIndexRaises) {
  const auto emb = toy_embeddings(5, 3, 11);
  const std::vector<Id> pool{0, 1, 2};
  const auto idx = NeighborIndex::build(emb, pool, 0.5);
  Rng rng = make_rng(11);
  EXPECT_THROW(corrupt_truncated({0, 0, 4}, CorruptSide::kTail, 1, idx, TripleSet{}, rng), SamplingError);
}

TEST(Properties, NoNegativeIsKnown) {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + uniform_index(rng, 20);
    const auto ts = testing::random_triples(n, 3, n * 4, rng);
    const TripleSet known(ts.begin(), ts.end());
    const auto emb = toy_embeddings(n, 4, 100 + trial);
    const auto idx = NeighborIndex::build(emb, 0.5);
    for (const auto& t : ts) {
      for (auto side : {CorruptSide::kHead, CorruptSide::kTail, CorruptSide::kBoth}) {
        try {
          for (const auto& neg : corrupt_uniform(t, side, 3, n, known, rng)) EXPECT_FALSE(known.contains(neg));
          for (const auto& neg : corrupt_truncated(t, side, 3, idx, known, rng)) EXPECT_FALSE(known.contains(neg));
        } catch (const SamplingError&) {
          // Dense corners of tiny graphs may have no admissible corruption.
        }
      }
    }
  }
}

TEST(Properties, SameSeedSameStreams) {
  const auto emb = toy_embeddings(30, 4, 13);
  const auto idx = NeighborIndex::build(emb, 0.3);
  const auto run = [&] {
    Rng rng = make_rng(13);
    std::vector<Triple> out;
    for (Id e = 0; e < 30; ++e) {
      const Triple t{e, 0, static_cast<Id>((e * 7 + 1) % 30)};
      for (auto& n : corrupt_uniform(t, CorruptSide::kBoth, 4, 30, TripleSet{t}, rng)) out.push_back(n);
      for (auto& n : corrupt_truncated(t, CorruptSide::kBoth, 4, idx, TripleSet{t}, rng)) out.push_back(n);
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

KnowledgeGraph chain() {
  const std::vector<Triple> ts{{0, 0, 1}, {1, 1, 2}};
  return KnowledgeGraph(3, 2, ts);
}

TEST(Paths, ChainHasOneRelationalWalk) {
  Rng rng = make_rng(14);
  for (const auto& p : sample_paths(chain(), PathKind::kRelational, 2, 20, rng))
    EXPECT_EQ(p.elements, (std::vector<Id>{0, 0, 1, 1, 2}));
}

TEST(Paths, ChainProjections) {
  Rng rng = make_rng(15);
  for (const auto& p : sample_paths(chain(), PathKind::kRelation, 2, 5, rng))
    EXPECT_EQ(p.elements, (std::vector<Id>{0, 1}));
  for (const auto& p : sample_paths(chain(), PathKind::kEntity, 2, 5, rng))
    EXPECT_EQ(p.elements, (std::vector<Id>{0, 1, 2}));
}

TEST(Paths, TooLongRaises) {
  Rng rng = make_rng(16);
  EXPECT_THROW(sample_paths(chain(), PathKind::kRelational, 3, 1, rng), SamplingError);
}

TEST(Paths, EveryStepIsAKnownTriple) {
  Rng rng = make_rng(17);
  const auto ts = testing::random_triples(40, 5, 300, rng);
  const KnowledgeGraph kg(40, 5, ts);
  const auto paths = sample_paths(kg, PathKind::kRelational, 3, 10000, rng);
  ASSERT_EQ(paths.size(), 10000u);
  for (const auto& p : paths) {
    ASSERT_EQ(p.elements.size(), 7u);
    for (std::size_t i = 0; i + 2 < p.elements.size(); i += 2)
      EXPECT_TRUE(kg.contains({p.elements[i], p.elements[i + 1], p.elements[i + 2]}));
  }
}

TEST(Subgraph, StarAllSpokes) {
  std::vector<Triple> ts;
  for (Id i = 1; i <= 6; ++i) ts.push_back({0, 0, i});
  const KnowledgeGraph kg(7, 1, ts);
  Rng rng = make_rng(18);
  const auto g = sample_subgraph(kg, 0, 1, 0, rng);
  EXPECT_EQ(g.nodes.size(), 7u);
  EXPECT_EQ(g.nodes.front(), 0u);
  EXPECT_EQ(as_multiset(g.edges), as_multiset(ts));
}

TEST(Subgraph, IsolatedCenter) {
  const std::vector<Triple> ts{{0, 0, 1}};
  const KnowledgeGraph kg(3, 1, ts);
  Rng rng = make_rng(19);
  const auto g = sample_subgraph(kg, 2, 2, 0, rng);
  EXPECT_EQ(g.nodes, (std::vector<Id>{2}));
  EXPECT_TRUE(g.edges.empty());
}

std::set<Id> ball(const KnowledgeGraph& kg, Id c, std::size_t hops) {
  std::map<Id, std::size_t> dist{{c, 0}};
  std::queue<Id> q;
  q.push(c);
  while (!q.empty()) {
    const Id u = q.front();
    q.pop();
    if (dist[u] == hops) continue;
    for (const auto& e : kg.edges(u))
      if (dist.emplace(e.neighbor, dist[u] + 1).second) q.push(e.neighbor);
  }
  std::set<Id> out;
  for (const auto& [k, v] : dist) out.insert(k);
  return out;
}

TEST(Subgraph, TwoHopWithinBfsBall) {
  Rng rng = make_rng(20);
  const auto ts = testing::random_triples(60, 3, 150, rng);
  const KnowledgeGraph kg(60, 3, ts);
  for (Id c = 0; c < 60; ++c) {
    for (std::size_t cap : {0u, 2u}) {
      const auto g = sample_subgraph(kg, c, 2, cap, rng);
      const auto want = ball(kg, c, 2);
      const std::set<Id> nodes(g.nodes.begin(), g.nodes.end());
      EXPECT_TRUE(std::includes(want.begin(), want.end(), nodes.begin(), nodes.end()));
      if (cap == 0) {
        EXPECT_EQ(nodes, want);
      }
      for (const auto& e : g.edges) {
        EXPECT_TRUE(kg.contains(e));
        EXPECT_TRUE(nodes.contains(e.head) && nodes.contains(e.tail));
      }
    }
  }
}

}  // namespace
}  // namespace mukg
