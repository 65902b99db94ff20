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
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mukg/error.hpp"
#include "mukg/kgdata.hpp"
#include "mukg/models.hpp"
#include "mukg/random.hpp"

namespace mukg {

enum class NegStrategy { kUniform, kSelfAdversarial, kTruncated };
enum class CorruptSide { kHead, kTail, kBoth };

struct NegSampleConfig {
  NegStrategy strategy = NegStrategy::kUniform;
  std::size_t k = 10;
  CorruptSide side = CorruptSide::kBoth;
  double truncation = 0.1;   // μ: fraction of nearest neighbours kept
  double temperature = 1.0;  // α for self-adversarial weights
  std::size_t refresh_epochs = 5;

  void validate() const {
    if (k < 1) throw ConfigError("neg.k must be at least 1");
    if (!(truncation > 0.0 && truncation <= 1.0)) throw ConfigError("neg.truncation must be in (0, 1]");
    if (!(temperature > 0.0)) throw ConfigError("neg.temperature must be positive");
    if (refresh_epochs < 1) throw ConfigError("neg.refresh_epochs must be at least 1");
  }
};

inline std::string_view to_string(NegStrategy s) {
  switch (s) {
    case NegStrategy::kUniform: return "uniform";
    case NegStrategy::kSelfAdversarial: return "self_adversarial";
    case NegStrategy::kTruncated: return "truncated";
  }
  return "?";
}

inline std::string_view to_string(CorruptSide s) {
  switch (s) {
    case CorruptSide::kHead: return "head";
    case CorruptSide::kTail: return "tail";
    case CorruptSide::kBoth: return "both";
  }
  return "?";
}

// Shuffled partition of `triples` into ⌈n / batch_size⌉ batches.
template <typename T>
std::vector<std::vector<T>> make_batches(std::span<const T> items, std::size_t batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<T>> batches;
  batches.reserve((items.size() + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<T> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) batch.push_back(items[order[i]]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

inline std::vector<std::vector<Triple>> make_batches(const std::vector<Triple>& triples,
                                                     std::size_t batch_size, Rng& rng) {
  return make_batches(std::span<const Triple>(triples), batch_size, rng);
}

namespace detail {

inline Triple replace(const Triple& t, bool head, Id e) {
  Triple out = t;
  (head ? out.head : out.tail) = e;
  return out;
}

inline bool pick_head(CorruptSide side, Rng& rng) {
  switch (side) {
    case CorruptSide::kHead: return true;
    case CorruptSide::kTail: return false;
    case CorruptSide::kBoth: return coin(rng);
  }
  return false;
}

// k negatives whose replacement entity comes from `draw(head_side)`;
// rejects known positives and the original triple.
template <typename Draw>
std::vector<Triple> corrupt_with(const Triple& t, CorruptSide side, std::size_t k, const TripleSet& known,
                                 std::size_t budget, Rng& rng, Draw&& draw) {
  std::vector<Triple> out;
  out.reserve(k);
  while (out.size() < k) {
    const bool head = pick_head(side, rng);
    bool found = false;
    for (std::size_t attempt = 0; attempt < budget; ++attempt) {
      const Triple neg = replace(t, head, draw(head));
      if (neg != t && !known.contains(neg)) {
        out.push_back(neg);
        found = true;
        break;
      }
    }
    if (!found) throw SamplingError("no valid corruption found within the retry budget");
  }
  return out;
}

}  // namespace detail

// Uniform corruption over entities 0..entity_count-1.
inline std::vector<Triple> corrupt_uniform(const Triple& t, CorruptSide side, std::size_t k,
                                           std::size_t entity_count, const TripleSet& known, Rng& rng) {
  if (entity_count < 2) throw SamplingError("uniform corruption needs at least two entities");
  return detail::corrupt_with(t, side, k, known, entity_count * 10, rng,
                              [&](bool) { return static_cast<Id>(uniform_index(rng, entity_count)); });
}

// Uniform corruption restricted to a candidate pool (e.g. one KG's entities).
inline std::vector<Triple> corrupt_uniform(const Triple& t, CorruptSide side, std::size_t k,
                                           std::span<const Id> pool, const TripleSet& known, Rng& rng) {
  if (pool.size() < 2) throw SamplingError("uniform corruption needs at least two entities");
  return detail::corrupt_with(t, side, k, known, pool.size() * 10, rng,
                              [&](bool) { return pool[uniform_index(rng, pool.size())]; });
}

// w_i = exp(α s_i) / Σ_j exp(α s_j), shifted by the max for stability.
inline std::vector<double> self_adversarial_weights(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw NumericError("self-adversarial weights need at least one score");
  if (!(alpha > 0.0)) throw NumericError("self-adversarial temperature must be positive");
  double top = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("non-finite negative score");
    top = std::max(top, s);
  }
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    w[i] = std::exp(alpha * (scores[i] - top));
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Per-entity list of the s = ⌈μ·N⌉ most cosine-similar other entities (N = pool size).
class NeighborIndex {
 public:
  NeighborIndex() = default;

  static NeighborIndex build(const Table& embeddings, std::span<const Id> pool, double mu) {
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("truncation ratio must be in (0, 1]");
    const std::size_t n = pool.size();
    if (n < 2) throw SamplingError("truncated sampling needs at least two entities");
    NeighborIndex idx;
    idx.mu_ = mu;
    idx.width_ = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::ceil(mu * static_cast<double>(n))));
    idx.slot_.assign(embeddings.rows, kAbsent);
    std::vector<double> inv_norm(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double len = kernel::l2(embeddings.row(pool[i]));
      inv_norm[i] = len > 0.0 ? 1.0 / len : 0.0;
      idx.slot_[pool[i]] = static_cast<std::uint32_t>(i);
    }
    idx.lists_.resize(n * idx.width_);
    std::vector<std::pair<double, Id>> sims(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = embeddings.row(pool[i]);
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        sims[m++] = {kernel::dot(row, embeddings.row(pool[j])) * inv_norm[i] * inv_norm[j], pool[j]};
      }
      const auto by_sim = [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      };
      std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(idx.width_), sims.end(), by_sim);
      for (std::size_t k = 0; k < idx.width_; ++k) idx.lists_[i * idx.width_ + k] = sims[k].second;
    }
    return idx;
  }

  static NeighborIndex build(const Table& embeddings, double mu) {
    std::vector<Id> pool(embeddings.rows);
    std::iota(pool.begin(), pool.end(), Id{0});
    return build(embeddings, pool, mu);
  }

  std::span<const Id> neighbors(Id e) const {
    if (e >= slot_.size() || slot_[e] == kAbsent) {
      throw SamplingError("neighbor index has no entry for entity " + std::to_string(e));
    }
    return {lists_.data() + std::size_t{slot_[e]} * width_, width_};
  }

  std::size_t width() const { return width_; }
  double mu() const { return mu_; }
  bool empty() const { return lists_.empty(); }

  bool operator==(const NeighborIndex&) const = default;

  // Little-endian: f64 μ, u64 width, u32 slot vector, u32 list vector.
  std::string to_bytes() const {
    std::ostringstream os(std::ios::binary);
    io::write_le<double>(os, mu_);
    io::write_le<std::uint64_t>(os, width_);
    for (const auto* v : {&slot_, &lists_}) {
      io::write_le<std::uint64_t>(os, v->size());
      for (std::uint32_t x : *v) io::write_le<std::uint32_t>(os, x);
    }
    return os.str();
  }

  static NeighborIndex from_bytes(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    NeighborIndex idx;
    idx.mu_ = io::read_le<double>(is);
    idx.width_ = io::read_le<std::uint64_t>(is);
    for (auto* v : {&idx.slot_, &idx.lists_}) {
      const auto n = io::read_le<std::uint64_t>(is);
      if (n > (std::uint64_t{1} << 36)) throw FormatError("neighbor index too large");
      v->resize(n);
      for (auto& x : *v) x = io::read_le<std::uint32_t>(is);
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in neighbor index");
    if (idx.width_ != 0 && idx.lists_.size() % idx.width_ != 0) throw FormatError("neighbor index shape mismatch");
    return idx;
  }

 private:
  static constexpr std::uint32_t kAbsent = 0xffffffffu;
  double mu_ = 0.0;
  std::size_t width_ = 0;
  std::vector<std::uint32_t> slot_;
  std::vector<Id> lists_;
};

// Replacement drawn uniformly from the replaced entity's nearest neighbours.
inline std::vector<Triple> corrupt_truncated(const Triple& t, CorruptSide side, std::size_t k,
                                             const NeighborIndex& index, const TripleSet& known, Rng& rng) {
  const std::size_t budget = std::max<std::size_t>(index.width() * 10, 10);
  return detail::corrupt_with(t, side, k, known, budget, rng, [&](bool head) {
    const auto list = index.neighbors(head ? t.head : t.tail);
    return list[uniform_index(rng, list.size())];
  });
}

// ---------------------------------------------------------------------------
// Paths and subgraphs

enum class PathKind { kRelational, kEntity, kRelation };

struct Path {
  PathKind kind = PathKind::kRelational;
  std::vector<Id> elements;

  bool operator==(const Path&) const = default;
};

// Random walks of `length` relation hops along outgoing edges. Dead ends are
// discarded and retried.
inline std::vector<Path> sample_paths(const KnowledgeGraph& kg, PathKind kind, std::size_t length,
                                      std::size_t count, Rng& rng) {
  if (length < 1) throw ConfigError("path length must be at least 1");
  if (kg.size() == 0) throw SamplingError("cannot sample paths from an empty graph");
  std::vector<Id> starts;
  for (Id e = 0; e < kg.entity_count(); ++e)
    if (kg.out_degree(e) > 0) starts.push_back(e);

  std::vector<Path> out;
  out.reserve(count);
  const std::size_t budget = 100 * count + 1000;
  std::vector<Edge> outgoing;
  std::vector<Id> walk;
  for (std::size_t attempt = 0; out.size() < count; ++attempt) {
    if (attempt >= budget) throw SamplingError("no walk of the requested length within the retry budget");
    walk.assign(1, starts[uniform_index(rng, starts.size())]);
    bool dead_end = false;
    for (std::size_t hop = 0; hop < length; ++hop) {
      outgoing.clear();
      for (const auto& e : kg.edges(walk.back()))
        if (e.outgoing) outgoing.push_back(e);
      if (outgoing.empty()) {
        dead_end = true;
        break;
      }
      const auto& step = outgoing[uniform_index(rng, outgoing.size())];
      walk.push_back(step.relation);
      walk.push_back(step.neighbor);
    }
    if (dead_end) continue;
    Path p{kind, {}};
    for (std::size_t i = 0; i < walk.size(); ++i) {
      const bool is_relation = i % 2 == 1;
      if (kind == PathKind::kRelational || (kind == PathKind::kEntity && !is_relation) ||
          (kind == PathKind::kRelation && is_relation)) {
        p.elements.push_back(walk[i]);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct Subgraph {
  Id center = 0;
  std::size_t hops = 1;
  std::vector<Id> nodes;  // discovery order, center first
  std::vector<Triple> edges;
};

// Breadth-first neighbourhood; each frontier node keeps at most
// `max_neighbors_per_hop` uniformly sampled incident edges (0 = no cap).
inline Subgraph sample_subgraph(const KnowledgeGraph& kg, Id center, std::size_t hops,
                                std::size_t max_neighbors_per_hop, Rng& rng) {
  if (center >= kg.entity_count()) throw DataError("subgraph center out of range");
  if (hops < 1) throw ConfigError("subgraph hops must be at least 1");
  Subgraph g{center, hops, {center}, {}};
  std::unordered_set<Id> seen{center};
  TripleSet edge_set;
  std::vector<Id> frontier{center};
  std::vector<Edge> incident;
  for (std::size_t hop = 0; hop < hops && !frontier.empty(); ++hop) {
    std::vector<Id> next;
    for (Id node : frontier) {
      const auto edges = kg.edges(node);
      incident.assign(edges.begin(), edges.end());
      if (max_neighbors_per_hop > 0 && incident.size() > max_neighbors_per_hop) {
        for (std::size_t i = 0; i < max_neighbors_per_hop; ++i) {
          const auto j = i + uniform_index(rng, incident.size() - i);
          std::swap(incident[i], incident[j]);
        }
        incident.resize(max_neighbors_per_hop);
      }
      for (const auto& e : incident) {
        const Triple t = e.outgoing ? Triple{node, e.relation, e.neighbor} : Triple{e.neighbor, e.relation, node};
        if (edge_set.insert(t).second) g.edges.push_back(t);
        if (seen.insert(e.neighbor).second) {
          g.nodes.push_back(e.neighbor);
          next.push_back(e.neighbor);
        }
      }
    }
    frontier = std::move(next);
  }
  return g;
}

}  // namespace mukg
