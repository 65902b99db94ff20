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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mukg/error.hpp"
#include "mukg/kgdata.hpp"
#include "mukg/models.hpp"
#include "mukg/parallel.hpp"

namespace mukg {

// 1-based rank of `truth` among the candidates. Candidates listed in
// `filtered` (other than truth) and, if a mask is given, candidates with
// mask[c] == 0 are skipped. Ties count half: rank = 1 + #greater + ⌊#equal / 2⌋.
// `filtered` must not contain duplicates.
inline std::uint64_t rank_entity(Id truth, std::span<const double> scores, std::span<const Id> filtered = {},
                                 std::span<const char> mask = {}) {
  if (truth >= scores.size()) throw DataError("truth id out of range");
  if (!mask.empty() && !mask[truth]) throw DataError("truth excluded from the candidate set");
  const double target = scores[truth];
  if (std::isnan(target)) throw NumericError("NaN score for the true candidate");
  std::uint64_t greater = 0;
  std::uint64_t equal = 0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (c == truth || (!mask.empty() && !mask[c])) continue;
    greater += scores[c] > target;
    equal += scores[c] == target;
  }
  for (Id f : filtered) {
    if (f == truth || f >= scores.size() || (!mask.empty() && !mask[f])) continue;
    greater -= scores[f] > target;
    equal -= scores[f] == target;
  }
  return 1 + greater + equal / 2;
}

struct RankingReport {
  std::string task;
  std::string filter;
  std::vector<std::uint64_t> ranks;
  std::map<std::size_t, double> hits;
  double mr = 0.0;
  double mrr = 0.0;

  std::size_t n_queries() const { return ranks.size(); }
  double hits_at(std::size_t k) const {
    auto it = hits.find(k);
    if (it == hits.end()) throw DataError("hits@" + std::to_string(k) + " was not computed");
    return it->second;
  }
};

inline const std::vector<std::size_t>& default_hits_ks() {
  static const std::vector<std::size_t> ks{1, 3, 10};
  return ks;
}

inline RankingReport aggregate(std::vector<std::uint64_t> ranks, std::span<const std::size_t> ks,
                               std::string task = {}, std::string filter = {}) {
  if (ranks.empty()) throw DataError("cannot aggregate an empty rank list");
  RankingReport r;
  r.task = std::move(task);
  r.filter = std::move(filter);
  double sum = 0.0;
  double sum_rec = 0.0;
  for (auto rank : ranks) {
    sum += static_cast<double>(rank);
    sum_rec += 1.0 / static_cast<double>(rank);
  }
  const auto n = static_cast<double>(ranks.size());
  r.mr = sum / n;
  r.mrr = sum_rec / n;
  for (auto k : ks) {
    const auto hit = std::count_if(ranks.begin(), ranks.end(), [k](auto rank) { return rank <= k; });
    r.hits[k] = static_cast<double>(hit) / n;
  }
  r.ranks = std::move(ranks);
  return r;
}

inline RankingReport aggregate(std::vector<std::uint64_t> ranks) {
  return aggregate(std::move(ranks), default_hits_ks());
}

inline nlohmann::json to_json(const RankingReport& r) {
  nlohmann::json hits = nlohmann::json::object();
  for (const auto& [k, v] : r.hits) hits[std::to_string(k)] = v;
  return {{"task", r.task}, {"hits", hits},           {"mr", r.mr},
          {"mrr", r.mrr},   {"n_queries", r.n_queries()}, {"filter", r.filter}};
}

inline RankingReport report_from_json(const nlohmann::json& j) {
  RankingReport r;
  r.task = j.value("task", "");
  r.filter = j.value("filter", "");
  r.mr = j.at("mr").get<double>();
  r.mrr = j.at("mrr").get<double>();
  for (const auto& [k, v] : j.at("hits").items()) r.hits[std::stoul(k)] = v.get<double>();
  return r;
}

inline void write_rank_tsv(std::ostream& os, const RankingReport& r) {
  for (std::size_t i = 0; i < r.ranks.size(); ++i) os << i << '\t' << r.ranks[i] << '\n';
}

// Known (h, r, ·) tails and (·, r, t) heads used to filter ranked candidates.
class FilterIndex {
 public:
  FilterIndex() = default;

  explicit FilterIndex(std::span<const Triple> triples) { add(triples); }

  void add(std::span<const Triple> triples) {
    for (const auto& t : triples) {
      if (!seen_.insert(t).second) continue;
      tails_[key(t.head, t.relation)].push_back(t.tail);
      heads_[key(t.tail, t.relation)].push_back(t.head);
    }
  }

  std::span<const Id> tails(Id h, Id r) const { return lookup(tails_, key(h, r)); }
  std::span<const Id> heads(Id r, Id t) const { return lookup(heads_, key(t, r)); }
  std::size_t size() const { return seen_.size(); }

 private:
  using Map = std::unordered_map<std::uint64_t, std::vector<Id>>;

  static std::uint64_t key(Id e, Id r) { return (std::uint64_t{e} << 32) | r; }

  static std::span<const Id> lookup(const Map& m, std::uint64_t k) {
    if (auto it = m.find(k); it != m.end()) return it->second;
    return {};
  }

  TripleSet seen_;
  Map tails_;
  Map heads_;
};

struct EvalOptions {
  std::vector<std::size_t> hits = {1, 3, 10};
  std::size_t workers = 1;
  std::string filter_name = "train";
  std::vector<char> candidate_mask;  // empty = all entities
};

// Head and tail queries for every test triple (2 per triple), ranked with
// the batched scorer. Query order: (t0 tail, t0 head, t1 tail, ...).
inline RankingReport link_prediction_eval(const ModelParams& p, std::span<const Triple> test,
                                          const FilterIndex& filter, const EvalOptions& opt = {}) {
  if (test.empty()) throw DataError("link prediction evaluation needs at least one test triple");
  std::vector<std::uint64_t> ranks(test.size() * 2);
  parallel_chunks(test.size(), opt.workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> scores(p.entity_count);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = test[i];
      score_all_tails(p, t.head, t.relation, scores);
      ranks[2 * i] = rank_entity(t.tail, scores, filter.tails(t.head, t.relation), opt.candidate_mask);
      score_all_heads(p, t.relation, t.tail, scores);
      ranks[2 * i + 1] = rank_entity(t.head, scores, filter.heads(t.relation, t.tail), opt.candidate_mask);
    }
  });
  return aggregate(std::move(ranks), opt.hits, "lp", opt.filter_name);
}

// ---------------------------------------------------------------------------
// Entity similarity

enum class SimilarityKind { kCosine, kInner, kEuclidean, kCsls };

inline std::string_view to_string(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::kCosine: return "cosine";
    case SimilarityKind::kInner: return "inner";
    case SimilarityKind::kEuclidean: return "euclidean";
    case SimilarityKind::kCsls: return "csls";
  }
  return "?";
}

inline std::optional<SimilarityKind> parse_similarity(std::string_view s) {
  for (auto k : {SimilarityKind::kCosine, SimilarityKind::kInner, SimilarityKind::kEuclidean, SimilarityKind::kCsls})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

// Stacks the given rows of a table into a dense matrix.
inline Matrix gather_rows(const Table& tab, std::span<const Id> ids) {
  Matrix m(ids.size(), tab.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto src = tab.row(ids[i]);
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return m;
}

namespace detail {

inline Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
  const auto inv = [](const Matrix& m) {
    std::vector<double> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double len = kernel::l2(m.row(i));
      out[i] = len > 0.0 ? 1.0 / len : 0.0;
    }
    return out;
  };
  const auto ia = inv(a);
  const auto ib = inv(b);
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) out(i, j) = kernel::dot(a.row(i), b.row(j)) * ia[i] * ib[j];
  return out;
}

// Mean of the κ largest entries of each row (cols = false) or column (cols = true).
inline std::vector<double> topk_mean(const Matrix& m, std::size_t kappa, bool by_column) {
  const std::size_t outer = by_column ? m.cols : m.rows;
  const std::size_t inner = by_column ? m.rows : m.cols;
  const std::size_t k = std::min(kappa, inner);
  std::vector<double> out(outer, 0.0);
  std::vector<double> buf(inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) buf[i] = by_column ? m(i, o) : m(o, i);
    std::partial_sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k), buf.end(), std::greater<>());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += buf[i];
    out[o] = k > 0 ? s / static_cast<double>(k) : 0.0;
  }
  return out;
}

}  // namespace detail

// m×n similarities between the rows of `a` and the rows of `b`; higher is
// more similar (Euclidean is reported as the negated distance).
inline Matrix similarity_matrix(const Matrix& a, const Matrix& b, SimilarityKind kind, std::size_t csls_k = 10) {
  if (a.cols != b.cols) throw DataError("similarity operands have different dimensions");
  switch (kind) {
    case SimilarityKind::kCosine:
      return detail::cosine_matrix(a, b);
    case SimilarityKind::kInner: {
      Matrix out(a.rows, b.rows);
      for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) out(i, j) = kernel::dot(a.row(i), b.row(j));
      return out;
    }
    case SimilarityKind::kEuclidean: {
      Matrix out(a.rows, b.rows);
      for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < a.cols; ++c) {
            const double d = a(i, c) - b(j, c);
            s += d * d;
          }
          out(i, j) = -std::sqrt(s);
        }
      return out;
    }
    case SimilarityKind::kCsls: {
      if (csls_k < 1) throw ConfigError("csls neighbourhood size must be at least 1");
      Matrix cos = detail::cosine_matrix(a, b);
      const auto ra = detail::topk_mean(cos, csls_k, false);
      const auto rb = detail::topk_mean(cos, csls_k, true);
      for (std::size_t i = 0; i < cos.rows; ++i)
        for (std::size_t j = 0; j < cos.cols; ++j) cos(i, j) = 2.0 * cos(i, j) - ra[i] - rb[j];
      return cos;
    }
  }
  return {};
}

struct AlignmentEvalOptions {
  SimilarityKind similarity = SimilarityKind::kCosine;
  std::size_t csls_k = 10;
  std::vector<std::size_t> hits = {1, 5, 10};
  // Empty: candidates are the right-hand entities of the test pairs.
  // Otherwise: the full right-KG entity list.
  std::vector<Id> candidates;
};

// Left → right ranking of each pair's true counterpart.
inline RankingReport alignment_eval(const Table& embeddings, std::span<const AlignedPair> pairs,
                                    const AlignmentEvalOptions& opt = {}) {
  if (pairs.empty()) throw DataError("alignment evaluation needs at least one pair");
  std::vector<Id> left;
  std::vector<Id> right;
  for (const auto& p : pairs) {
    left.push_back(p.left);
    right.push_back(p.right);
  }
  const std::vector<Id>& cands = opt.candidates.empty() ? right : opt.candidates;
  std::unordered_map<Id, std::size_t> slot;
  for (std::size_t j = 0; j < cands.size(); ++j) slot.emplace(cands[j], j);
  const Matrix sims = similarity_matrix(gather_rows(embeddings, left), gather_rows(embeddings, cands),
                                        opt.similarity, opt.csls_k);
  std::vector<std::uint64_t> ranks(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto it = slot.find(right[i]);
    if (it == slot.end()) throw DataError("true counterpart missing from the candidate set");
    ranks[i] = rank_entity(static_cast<Id>(it->second), sims.row(i));
  }
  return aggregate(std::move(ranks), opt.hits, "ea", std::string(to_string(opt.similarity)));
}

// (instance, rdf:type, ?) queries ranked over type entities only.
inline RankingReport typing_eval(const ModelParams& p, const TypeAssertions& types,
                                 std::span<const TypeAssertion> test, const EvalOptions& opt = {}) {
  if (types.type_ids.empty()) throw DataError("typing evaluation needs a non-empty type vocabulary");
  if (test.empty()) throw DataError("typing evaluation needs at least one assertion");
  std::vector<char> mask(p.entity_count, 0);
  for (Id t : types.type_ids) mask.at(t) = 1;
  FilterIndex filter;
  if (opt.filter_name != "none") {
    std::vector<Triple> known;
    const auto add = [&](const std::vector<TypeAssertion>& v) {
      for (const auto& a : v) known.push_back({a.instance, types.type_relation, a.type});
    };
    add(types.train);
    if (opt.filter_name == "train+valid+test") {
      add(types.valid);
      add(types.test);
    }
    filter.add(known);
  }
  std::vector<std::uint64_t> ranks(test.size());
  parallel_chunks(test.size(), opt.workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> scores(p.entity_count);
    for (std::size_t i = begin; i < end; ++i) {
      score_all_tails(p, test[i].instance, types.type_relation, scores);
      ranks[i] = rank_entity(test[i].type, scores, filter.tails(test[i].instance, types.type_relation), mask);
    }
  });
  return aggregate(std::move(ranks), opt.hits, "et", opt.filter_name);
}

}  // namespace mukg
