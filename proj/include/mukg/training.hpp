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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mukg/error.hpp"
#include "mukg/kgdata.hpp"
#include "mukg/models.hpp"
#include "mukg/parallel.hpp"
#include "mukg/random.hpp"
#include "mukg/sampling.hpp"

namespace mukg {

// ---------------------------------------------------------------------------
// Losses

enum class LossKind { kMarginalRanking, kLimitBased, kNceSelfAdversarial, kMeanSquared };

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::kMarginalRanking: return "marginal_ranking";
    case LossKind::kLimitBased: return "limit_based";
    case LossKind::kNceSelfAdversarial: return "nce_self_adversarial";
    case LossKind::kMeanSquared: return "mean_squared";
  }
  return "?";
}

inline std::optional<LossKind> parse_loss_kind(std::string_view s) {
  for (auto k : {LossKind::kMarginalRanking, LossKind::kLimitBased, LossKind::kNceSelfAdversarial,
                 LossKind::kMeanSquared})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct LossConfig {
  LossKind kind = LossKind::kMarginalRanking;
  double margin = 1.0;       // γ
  double lambda_pos = -1.0;  // λ₁: positives should score at least this
  double lambda_neg = -2.0;  // λ₂: negatives should score at most this
  double balance = 1.0;      // μ_loss
  std::optional<double> nce_offset;  // γ₀; defaults to margin

  double offset() const { return nce_offset.value_or(margin); }

  void validate() const {
    if (margin < 0.0) throw ConfigError("loss.margin must be non-negative");
    if (lambda_neg > lambda_pos) throw ConfigError("loss.lambda_neg must not exceed loss.lambda_pos");
    if (balance < 0.0) throw ConfigError("loss.balance must be non-negative");
  }
};

// Loss of one positive against its negatives, plus ∂loss/∂score seeds.
struct LossValue {
  double value = 0.0;
  double d_pos = 0.0;
  std::vector<double> d_neg;
};

namespace detail {

// −log σ(x) computed without overflow.
inline double neg_log_sigmoid(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline LossValue loss(const LossConfig& cfg, double pos, std::span<const double> negs,
                      std::span<const double> weights = {}) {
  if (std::isnan(pos)) throw NumericError("NaN positive score");
  for (double s : negs)
    if (std::isnan(s)) throw NumericError("NaN negative score");
  if (!weights.empty() && cfg.kind != LossKind::kNceSelfAdversarial)
    throw ConfigError("negative weights are only used by the NCE loss");
  if (!weights.empty() && weights.size() != negs.size()) throw DataError("one weight per negative is required");

  LossValue out;
  out.d_neg.assign(negs.size(), 0.0);
  switch (cfg.kind) {
    case LossKind::kMarginalRanking:
      for (std::size_t i = 0; i < negs.size(); ++i) {
        const double gap = cfg.margin - pos + negs[i];
        if (gap > 0.0) {
          out.value += gap;
          out.d_pos -= 1.0;
          out.d_neg[i] = 1.0;
        }
      }
      break;
    case LossKind::kLimitBased:
      if (cfg.lambda_pos - pos > 0.0) {
        out.value += cfg.lambda_pos - pos;
        out.d_pos = -1.0;
      }
      for (std::size_t i = 0; i < negs.size(); ++i) {
        if (negs[i] - cfg.lambda_neg > 0.0) {
          out.value += cfg.balance * (negs[i] - cfg.lambda_neg);
          out.d_neg[i] = cfg.balance;
        }
      }
      break;
    case LossKind::kNceSelfAdversarial: {
      const double g0 = cfg.offset();
      out.value = detail::neg_log_sigmoid(pos - g0);
      out.d_pos = -detail::sigmoid(g0 - pos);
      const double uniform = negs.empty() ? 0.0 : 1.0 / static_cast<double>(negs.size());
      for (std::size_t i = 0; i < negs.size(); ++i) {
        const double w = weights.empty() ? uniform : weights[i];
        out.value += w * detail::neg_log_sigmoid(g0 - negs[i]);
        out.d_neg[i] = w * detail::sigmoid(negs[i] - g0);
      }
      break;
    }
    case LossKind::kMeanSquared:
      throw ConfigError("mean_squared is a pair loss; use pair_squared_loss");
  }
  return out;
}

// Σ over positives of the per-positive loss; neg_scores holds k scores per positive.
inline double loss_total(const LossConfig& cfg, std::span<const double> pos_scores,
                         std::span<const double> neg_scores) {
  if (pos_scores.empty()) return 0.0;
  if (neg_scores.size() % pos_scores.size() != 0) throw DataError("negatives are not a multiple of positives");
  const std::size_t k = neg_scores.size() / pos_scores.size();
  double total = 0.0;
  for (std::size_t i = 0; i < pos_scores.size(); ++i) total += loss(cfg, pos_scores[i], neg_scores.subspan(i * k, k)).value;
  return total;
}

// ‖a − b‖²; adds w·∂/∂a and w·∂/∂b into the gradient spans when non-empty.
inline double pair_squared_loss(std::span<const double> a, std::span<const double> b, double w = 1.0,
                                std::span<double> ga = {}, std::span<double> gb = {}) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (std::isnan(d)) throw NumericError("NaN embedding in pair loss");
    s += d * d;
    if (!ga.empty()) ga[i] += w * 2.0 * d;
    if (!gb.empty()) gb[i] -= w * 2.0 * d;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { kSgd, kAdagrad, kAdam };

inline std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdagrad: return "adagrad";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}

inline std::optional<OptimizerKind> parse_optimizer_kind(std::string_view s) {
  for (auto k : {OptimizerKind::kSgd, OptimizerKind::kAdagrad, OptimizerKind::kAdam})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline double default_learning_rate(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd: return 0.01;
    case OptimizerKind::kAdagrad: return 0.1;
    case OptimizerKind::kAdam: return 0.001;
  }
  return 0.01;
}

// Accumulators mirror the parameter tables. A row's slots stay zero (its
// "unmaterialized" state) until a gradient first touches it.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdagrad;
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<std::vector<double>> first;   // adagrad: Σg²; adam: m
  std::vector<std::vector<double>> second;  // adam: v
  std::vector<std::vector<std::uint32_t>> row_steps;  // adam per-row step counts

  bool operator==(const OptimizerState&) const = default;
};

inline OptimizerState make_optimizer(OptimizerKind kind, double lr, const ModelParams& p) {
  OptimizerState s;
  s.kind = kind;
  s.lr = lr;
  if (kind == OptimizerKind::kSgd) return s;
  for (const auto& t : p.tables) {
    s.first.emplace_back(t.data.size(), 0.0);
    if (kind == OptimizerKind::kAdam) {
      s.second.emplace_back(t.data.size(), 0.0);
      s.row_steps.emplace_back(t.rows, 0u);
    }
  }
  return s;
}

namespace detail {

template <typename T>
inline T load(T& x) {
  return std::atomic_ref<T>(x).load(std::memory_order_relaxed);
}

template <typename T>
inline void store(T& x, T v) {
  std::atomic_ref<T>(x).store(v, std::memory_order_relaxed);
}

}  // namespace detail

// θ ← θ − update(g) for every row of the sparse loss gradient. Element
// accesses are relaxed atomics so concurrent workers may call this on the
// same tables (last writer wins per element).
inline void optimizer_step(OptimizerState& s, ModelParams& p, const SparseGrad& g) {
  for (const auto& e : g.entries()) {
    auto& tab = p.tables[e.table];
    const auto grad = g.values(e);
    double* theta = tab.data.data() + std::size_t{e.row} * tab.cols;
    double bc1 = 1.0;
    double bc2 = 1.0;
    if (s.kind == OptimizerKind::kAdam) {
      const auto step = std::atomic_ref<std::uint32_t>(s.row_steps[e.table][e.row]).fetch_add(1, std::memory_order_relaxed) + 1;
      bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(step));
      bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(step));
    }
    for (std::size_t i = 0; i < e.cols; ++i) {
      const double gi = grad[i];
      double delta = 0.0;
      switch (s.kind) {
        case OptimizerKind::kSgd:
          delta = s.lr * gi;
          break;
        case OptimizerKind::kAdagrad: {
          double& acc = s.first[e.table][std::size_t{e.row} * tab.cols + i];
          const double a = detail::load(acc) + gi * gi;
          detail::store(acc, a);
          delta = s.lr * gi / (std::sqrt(a) + s.eps);
          break;
        }
        case OptimizerKind::kAdam: {
          double& m = s.first[e.table][std::size_t{e.row} * tab.cols + i];
          double& v = s.second[e.table][std::size_t{e.row} * tab.cols + i];
          const double mn = s.beta1 * detail::load(m) + (1.0 - s.beta1) * gi;
          const double vn = s.beta2 * detail::load(v) + (1.0 - s.beta2) * gi * gi;
          detail::store(m, mn);
          detail::store(v, vn);
          delta = s.lr * (mn / bc1) / (std::sqrt(vn / bc2) + s.eps);
          break;
        }
      }
      const double updated = detail::load(theta[i]) - delta;
      if (!std::isfinite(updated)) {
        throw NumericError("non-finite update in parameter " + tab.name + "[" + std::to_string(e.row) + "]");
      }
      detail::store(theta[i], updated);
    }
  }
}

// Constraint projection on the rows a gradient touched, with relaxed atomic
// element access (see optimizer_step).
inline void constrain_touched(ModelParams& p, const SparseGrad& touched) {
  const auto scale_row = [](std::span<double> row, double factor) {
    for (auto& v : row) detail::store(v, detail::load(v) * factor);
  };
  const auto row_norm = [](std::span<double> row) {
    double s = 0.0;
    for (auto& v : row) {
      const double x = detail::load(v);
      s += x * x;
    }
    return std::sqrt(s);
  };
  for (const auto& e : touched.entries()) {
    if (e.table == 0 && is_translational(p.kind())) {
      auto row = p.entities().row(e.row);
      const double len = row_norm(row);
      if (len > 1.0 + detail::kConstraintSlack) scale_row(row, 1.0 / len);
    } else if (e.table == 1 && p.kind() == ModelKind::kTransH) {
      auto r = p.tables[1].row(e.row);
      auto w = p.tables[2].row(e.row);
      const double len = row_norm(w);
      if (len > 0.0 && std::abs(len - 1.0) > detail::kConstraintSlack) scale_row(w, 1.0 / len);
      double a = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) a += detail::load(w[i]) * detail::load(r[i]);
      if (std::abs(a) > detail::kConstraintSlack * row_norm(r))
        for (std::size_t i = 0; i < r.size(); ++i) detail::store(r[i], detail::load(r[i]) - a * detail::load(w[i]));
    }
  }
}

// ---------------------------------------------------------------------------
// Trainer

enum class ParallelMode { kHogwild, kSync };

inline std::string_view to_string(ParallelMode m) { return m == ParallelMode::kHogwild ? "hogwild" : "sync"; }

enum class AlignLossKind { kPair, kMargin };

struct AlignmentObjective {
  std::vector<std::pair<Id, Id>> pairs;  // (left, right) entity ids
  std::vector<Id> left_pool;
  std::vector<Id> right_pool;
  AlignLossKind loss = AlignLossKind::kPair;
  double weight = 5.0;   // β
  double margin = 1.0;
  std::size_t k = 5;     // negatives per pair (margin loss)
};

struct TrainConfig {
  ModelConfig model;
  LossConfig loss;
  NegSampleConfig neg;
  OptimizerKind optimizer = OptimizerKind::kAdagrad;
  double lr = 0.1;
  std::size_t batch_size = 1000;
  std::size_t workers = 1;
  ParallelMode parallel = ParallelMode::kHogwild;
  std::uint64_t seed = 0;

  void validate() const {
    loss.validate();
    neg.validate();
    if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (!(lr >= 0.0)) throw ConfigError("train.lr must be non-negative");
    if (neg.strategy == NegStrategy::kSelfAdversarial && loss.kind != LossKind::kNceSelfAdversarial)
      throw ConfigError("self-adversarial sampling requires the nce_self_adversarial loss");
    if (loss.kind == LossKind::kMeanSquared) throw ConfigError("mean_squared is only valid as an alignment loss");
  }
};

struct TrainingData {
  std::vector<Triple> triples;
  TripleSet known;             // negatives are never drawn from here
  // Disjoint corruption pools, e.g. one per KG, or instances and types. A
  // replacement is drawn from the pool of the entity it replaces; entities
  // outside every pool, or in a pool of one, draw from all entities.
  std::vector<std::vector<Id>> entity_pools;
  std::optional<AlignmentObjective> alignment;
};

inline TrainingData make_training_data(std::vector<Triple> triples) {
  TrainingData d;
  d.known = TripleSet(triples.begin(), triples.end());
  d.triples = std::move(triples);
  return d;
}

struct EpochStats {
  std::size_t epoch = 0;      // 1-based index of the finished epoch
  double loss = 0.0;          // mean triple loss per positive
  double align_loss = 0.0;    // mean alignment loss per pair
  double seconds = 0.0;
  std::size_t positives = 0;
};

namespace detail {

// Worker-local copies of the parameter rows touched by a batch.
class RowCache {
 public:
  void clear() {
    index_.clear();
    storage_.clear();
  }

  void add(const ModelParams& p, const Triple& t) {
    for (std::uint32_t i = 0; i < p.tables.size(); ++i) {
      const auto& tab = p.tables[i];
      if (tab.key == RowKey::kEntity) {
        copy(tab, i, t.head);
        copy(tab, i, t.tail);
      } else {
        copy(tab, i, t.relation);
      }
    }
  }

  void add_entity(const ModelParams& p, Id e) { copy(p.tables[0], 0, e); }

  std::span<const double> row(std::uint32_t table, Id id, std::size_t cols) const {
    return {storage_.data() + index_.at(key(table, id)), cols};
  }

  TripleRows rows(const ModelParams& p, const Triple& t) const {
    TripleRows out;
    for (std::uint32_t i = 0; i < p.tables.size(); ++i) {
      const auto& tab = p.tables[i];
      if (tab.key == RowKey::kEntity) {
        out.head[i] = row(i, t.head, tab.cols);
        out.tail[i] = row(i, t.tail, tab.cols);
      } else {
        out.rel[i] = row(i, t.relation, tab.cols);
      }
    }
    return out;
  }

 private:
  static std::uint64_t key(std::uint32_t table, Id id) { return (std::uint64_t{table} << 32) | id; }

  void copy(const Table& tab, std::uint32_t table, Id id) {
    if (id >= tab.rows) throw DataError("row id out of range");
    const auto k = key(table, id);
    if (index_.contains(k)) return;
    const std::size_t offset = storage_.size();
    storage_.resize(offset + tab.cols);
    const double* src = tab.data.data() + std::size_t{id} * tab.cols;
    for (std::size_t c = 0; c < tab.cols; ++c) storage_[offset + c] = load(const_cast<double&>(src[c]));
    index_.emplace(k, offset);
  }

  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::vector<double> storage_;
};

struct WorkerResult {
  double loss = 0.0;
  double align_loss = 0.0;
};

}  // namespace detail

// Owns the model, optimizer and RNG of a training run.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::shared_ptr<const TrainingData> data, ModelParams params)
      : cfg_(std::move(cfg)), data_(std::move(data)), params_(std::move(params)),
        opt_(make_optimizer(cfg_.optimizer, cfg_.lr, params_)), rng_(make_rng(cfg_.seed, 0x7a41)) {
    cfg_.validate();
    if (!data_) throw DataError("trainer needs training data");
    if (cfg_.model.kind != params_.kind()) throw ConfigError("model kind does not match parameters");
    if (params_.entity_count < 2) throw DataError("training needs at least two entities");
    pool_of_.assign(data_->entity_pools.empty() ? 0 : params_.entity_count, kNoPool);
    for (std::size_t k = 0; k < data_->entity_pools.size(); ++k) {
      std::unordered_set<Id> seen;
      for (Id e : data_->entity_pools[k]) {
        if (e >= params_.entity_count) throw DataError("entity pool id out of range");
        if (pool_of_[e] != kNoPool || !seen.insert(e).second) throw DataError("entity pools must be disjoint");
        if (data_->entity_pools[k].size() >= 2) pool_of_[e] = k;
      }
    }
  }

  // Fresh parameters drawn from the run seed.
  Trainer(TrainConfig cfg, TrainingData data, std::size_t n_entities, std::size_t n_relations)
      : Trainer(cfg, std::make_shared<const TrainingData>(std::move(data)),
                init_params(cfg.model, n_entities, n_relations, cfg.seed)) {}

  const TrainConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }
  const OptimizerState& optimizer() const { return opt_; }
  OptimizerState& optimizer() { return opt_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }
  std::size_t epoch() const { return epoch_; }
  void set_epoch(std::size_t e) { epoch_ = e; }
  const TrainingData& data() const { return *data_; }
  void set_workers(std::size_t w) { cfg_.workers = std::max<std::size_t>(1, w); }

  void add_alignment_pairs(std::span<const std::pair<Id, Id>> pairs) {
    if (!data_->alignment) throw ConfigError("no alignment objective configured");
    auto copy = std::make_shared<TrainingData>(*data_);
    copy->alignment->pairs.insert(copy->alignment->pairs.end(), pairs.begin(), pairs.end());
    data_ = std::move(copy);
  }

  EpochStats train_epoch() {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t epoch_seed = rng_();
    if (cfg_.neg.strategy == NegStrategy::kTruncated &&
        (neighbor_index_.empty() || epoch_ % cfg_.neg.refresh_epochs == 0)) {
      rebuild_neighbor_index();
    }
    Rng batch_rng = make_rng(epoch_seed, 0);
    auto batches = make_batches(data_->triples, cfg_.batch_size, batch_rng);
    std::vector<std::vector<std::pair<Id, Id>>> pair_batches;
    if (data_->alignment && !data_->alignment->pairs.empty()) {
      const std::size_t n_batches = std::max<std::size_t>(1, batches.size());
      const std::size_t per = (data_->alignment->pairs.size() + n_batches - 1) / n_batches;
      pair_batches = make_batches(std::span<const std::pair<Id, Id>>(data_->alignment->pairs), per, batch_rng);
      batches.resize(std::max(batches.size(), pair_batches.size()));
    }
    pair_batches.resize(batches.size());

    double total = 0.0;
    double align_total = 0.0;
    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg_.workers, batches.size()));
    if (cfg_.parallel == ParallelMode::kHogwild) {
      std::vector<detail::WorkerResult> results(workers);
      parallel_chunks(workers, workers, [&](std::size_t wb, std::size_t we, std::size_t) {
        for (std::size_t w = wb; w < we; ++w) {
          Rng rng = make_rng(epoch_seed, 1 + w);
          detail::RowCache cache;
          SparseGrad grad;
          for (std::size_t b = w; b < batches.size(); b += workers) {
            cache.clear();
            grad.clear();
            auto r = process(batches[b], pair_batches[b], rng, cache, grad);
            results[w].loss += r.loss;
            results[w].align_loss += r.align_loss;
            optimizer_step(opt_, params_, grad);
            constrain_touched(params_, grad);
          }
        }
      });
      for (const auto& r : results) {
        total += r.loss;
        align_total += r.align_loss;
      }
    } else {
      std::vector<detail::WorkerResult> results(workers);
      std::vector<SparseGrad> grads(workers);
      std::vector<Rng> rngs;
      for (std::size_t w = 0; w < workers; ++w) rngs.push_back(make_rng(epoch_seed, 1 + w));
      for (std::size_t b = 0; b < batches.size(); ++b) {
        const auto& batch = batches[b];
        const auto& pairs = pair_batches[b];
        parallel_chunks(workers, workers, [&](std::size_t wb, std::size_t we, std::size_t) {
          for (std::size_t w = wb; w < we; ++w) {
            const auto slice = [&](const auto& v) {
              const std::size_t chunk = (v.size() + workers - 1) / workers;
              const std::size_t lo = std::min(v.size(), w * chunk);
              const std::size_t hi = std::min(v.size(), lo + chunk);
              using T = typename std::decay_t<decltype(v)>::value_type;
              return std::vector<T>(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
            };
            detail::RowCache cache;
            grads[w].clear();
            auto r = process(slice(batch), slice(pairs), rngs[w], cache, grads[w]);
            results[w].loss += r.loss;
            results[w].align_loss += r.align_loss;
          }
        });
        SparseGrad merged;
        for (const auto& g : grads) merged.merge(g);
        optimizer_step(opt_, params_, merged);
        constrain_touched(params_, merged);
      }
      for (const auto& r : results) {
        total += r.loss;
        align_total += r.align_loss;
      }
    }

    ++epoch_;
    EpochStats stats;
    stats.epoch = epoch_;
    stats.positives = data_->triples.size();
    stats.loss = data_->triples.empty() ? 0.0 : total / static_cast<double>(data_->triples.size());
    if (data_->alignment && !data_->alignment->pairs.empty())
      stats.align_loss = align_total / static_cast<double>(data_->alignment->pairs.size());
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
  }

  // Serialized truncated-sampling indices (one per pool, plus one over all
  // entities): a count then length-prefixed blobs; empty when none is built.
  std::string neighbor_index_bytes() const {
    if (neighbor_index_.empty()) return {};
    std::ostringstream os(std::ios::binary);
    io::write_le<std::uint64_t>(os, neighbor_index_.size());
    for (const auto& idx : neighbor_index_) {
      const std::string blob = idx.to_bytes();
      io::write_le<std::uint64_t>(os, blob.size());
      os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    }
    return std::move(os).str();
  }
  void set_neighbor_index_bytes(const std::string& bytes) {
    neighbor_index_.clear();
    if (bytes.empty()) return;
    std::istringstream is(bytes, std::ios::binary);
    const auto n = io::read_le<std::uint64_t>(is);
    if (n != data_->entity_pools.size() + 1) throw FormatError("neighbor index count does not match entity pools");
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto len = io::read_le<std::uint64_t>(is);
      if (len > bytes.size()) throw FormatError("neighbor index blob too long");
      std::string blob(len, '\0');
      if (!is.read(blob.data(), static_cast<std::streamsize>(len))) throw FormatError("truncated neighbor index");
      neighbor_index_.push_back(NeighborIndex::from_bytes(blob));
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after neighbor index");
  }

  // Negatives the trainer would draw for `t` (exposed for inspection).
  std::vector<Triple> sample_negatives(const Triple& t, Rng& rng) const { return negatives_for(t, rng); }

  void rebuild_neighbor_index() {
    neighbor_index_.clear();
    for (const auto& pool : data_->entity_pools)
      neighbor_index_.push_back(pool.size() >= 2 ? NeighborIndex::build(params_.entities(), pool, cfg_.neg.truncation)
                                                 : NeighborIndex());
    neighbor_index_.push_back(NeighborIndex::build(params_.entities(), cfg_.neg.truncation));
  }

 private:
  static constexpr std::size_t kNoPool = static_cast<std::size_t>(-1);

  std::size_t pool_of(Id e) const { return pool_of_.empty() ? kNoPool : pool_of_[e]; }

  std::vector<Triple> negatives_for(const Triple& t, Rng& rng) const {
    if (pool_of_.empty()) {
      if (cfg_.neg.strategy == NegStrategy::kTruncated)
        return corrupt_truncated(t, cfg_.neg.side, cfg_.neg.k, neighbor_index_.back(), data_->known, rng);
      return corrupt_uniform(t, cfg_.neg.side, cfg_.neg.k, params_.entity_count, data_->known, rng);
    }
    const auto replaced = [&](bool head) { return head ? t.head : t.tail; };
    if (cfg_.neg.strategy == NegStrategy::kTruncated) {
      std::size_t width = 1;
      for (const auto& idx : neighbor_index_) width = std::max(width, idx.width());
      const std::size_t budget = width * 10;
      return detail::corrupt_with(t, cfg_.neg.side, cfg_.neg.k, data_->known, budget, rng, [&](bool head) {
        const Id e = replaced(head);
        const std::size_t pool = pool_of(e);
        const auto list = neighbor_index_[pool == kNoPool ? neighbor_index_.size() - 1 : pool].neighbors(e);
        return list[uniform_index(rng, list.size())];
      });
    }
    return detail::corrupt_with(t, cfg_.neg.side, cfg_.neg.k, data_->known, params_.entity_count * 10, rng,
                                [&](bool head) {
                                  const std::size_t pool = pool_of(replaced(head));
                                  if (pool == kNoPool) return static_cast<Id>(uniform_index(rng, params_.entity_count));
                                  const auto& ids = data_->entity_pools[pool];
                                  return ids[uniform_index(rng, ids.size())];
                                });
  }

  // Loss and sparse loss-gradient of one batch against a snapshot of the
  // rows it touches.
  detail::WorkerResult process(const std::vector<Triple>& batch, const std::vector<std::pair<Id, Id>>& pairs,
                               Rng& rng, detail::RowCache& cache, SparseGrad& grad) const {
    detail::WorkerResult out;
    std::vector<std::vector<Triple>> negs(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      negs[i] = negatives_for(batch[i], rng);
      cache.add(params_, batch[i]);
      for (const auto& n : negs[i]) cache.add(params_, n);
    }
    std::vector<double> neg_scores;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double pos = score_rows(params_.config, cache.rows(params_, batch[i]));
      neg_scores.resize(negs[i].size());
      for (std::size_t j = 0; j < negs[i].size(); ++j)
        neg_scores[j] = score_rows(params_.config, cache.rows(params_, negs[i][j]));
      std::vector<double> weights;
      if (cfg_.neg.strategy == NegStrategy::kSelfAdversarial)
        weights = self_adversarial_weights(neg_scores, cfg_.neg.temperature);
      const LossValue lv = loss(cfg_.loss, pos, neg_scores, weights);
      out.loss += lv.value;
      // Loss seeds are ∂loss/∂score; the score gradient is scaled by them once here.
      if (lv.d_pos != 0.0) {
        const auto g = grad_rows_of(params_, batch[i], grad);
        score_rows(params_.config, cache.rows(params_, batch[i]), &g, lv.d_pos);
      }
      for (std::size_t j = 0; j < negs[i].size(); ++j) {
        if (lv.d_neg[j] == 0.0) continue;
        const auto g = grad_rows_of(params_, negs[i][j], grad);
        score_rows(params_.config, cache.rows(params_, negs[i][j]), &g, lv.d_neg[j]);
      }
    }
    if (!pairs.empty()) out.align_loss = process_pairs(pairs, rng, cache, grad);
    return out;
  }

  double process_pairs(const std::vector<std::pair<Id, Id>>& pairs, Rng& rng, detail::RowCache& cache,
                       SparseGrad& grad) const {
    const auto& obj = *data_->alignment;
    const std::size_t d = params_.entities().cols;
    double total = 0.0;
    for (const auto& [a, b] : pairs) {
      cache.add_entity(params_, a);
      cache.add_entity(params_, b);
    }
    if (obj.loss == AlignLossKind::kPair) {
      for (const auto& [a, b] : pairs) {
        if (a == b) continue;
        grad.row(0, a, d);
        auto gb = grad.row(0, b, d);
        auto ga = grad.row(0, a, d);
        total += obj.weight * pair_squared_loss(cache.row(0, a, d), cache.row(0, b, d), obj.weight, ga, gb);
      }
      return total;
    }
    // Margin loss on −‖a − b‖ against pairs with one side replaced.
    const auto distance_grad = [&](Id x, Id y, double w) {
      const auto ex = cache.row(0, x, d);
      const auto ey = cache.row(0, y, d);
      double len = 0.0;
      for (std::size_t i = 0; i < d; ++i) len += (ex[i] - ey[i]) * (ex[i] - ey[i]);
      len = std::sqrt(len);
      if (w != 0.0 && len > 0.0 && x != y) {
        grad.row(0, x, d);
        auto gy = grad.row(0, y, d);
        auto gx = grad.row(0, x, d);
        for (std::size_t i = 0; i < d; ++i) {
          const double v = (ex[i] - ey[i]) / len;
          gx[i] -= w * v;  // ∂(−len)/∂x = −v
          gy[i] += w * v;
        }
      }
      return -len;
    };
    for (const auto& [a, b] : pairs) {
      std::vector<std::pair<Id, Id>> corrupted;
      for (std::size_t j = 0; j < obj.k; ++j) {
        const bool left = coin(rng);
        const auto& pool = left ? obj.left_pool : obj.right_pool;
        if (pool.empty()) continue;
        const Id c = pool[uniform_index(rng, pool.size())];
        corrupted.emplace_back(left ? c : a, left ? b : c);
        cache.add_entity(params_, c);
      }
      const double pos = distance_grad(a, b, 0.0);
      for (const auto& [x, y] : corrupted) {
        if (x == a && y == b) continue;
        const double neg = distance_grad(x, y, 0.0);
        const double gap = obj.margin - pos + neg;
        if (gap <= 0.0) continue;
        total += obj.weight * gap;
        distance_grad(a, b, -obj.weight);
        distance_grad(x, y, obj.weight);
      }
    }
    return total;
  }

  TrainConfig cfg_;
  std::shared_ptr<const TrainingData> data_;
  ModelParams params_;
  OptimizerState opt_;
  Rng rng_;
  std::size_t epoch_ = 0;
  std::vector<std::size_t> pool_of_;  // entity -> pool, kNoPool if none
  std::vector<NeighborIndex> neighbor_index_;
};

// ---------------------------------------------------------------------------
// Early stopping

struct EarlyStopConfig {
  std::size_t interval = 10;   // epochs between validation runs
  std::size_t patience = 3;    // consecutive non-improving validations before stopping
  std::size_t max_epochs = 100;
};

struct EarlyStopState {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t bad_evals = 0;

  bool operator==(const EarlyStopState&) const = default;

  // Records a validation result; returns true if it is a new best.
  bool observe(double metric, std::size_t epoch) {
    if (metric > best) {
      best = metric;
      best_epoch = epoch;
      bad_evals = 0;
      return true;
    }
    ++bad_evals;
    return false;
  }

  bool exhausted(std::size_t patience) const { return bad_evals >= patience; }
};

struct ValidationPoint {
  std::size_t epoch;
  double metric;
};

struct ControllerResult {
  ModelParams best_params;
  OptimizerState best_optimizer;
  EarlyStopState state;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  std::vector<ValidationPoint> history;
};

// Trains until max_epochs or until `patience` consecutive validations fail to
// improve on the best one; the initial parameters are validated at epoch 0.
// The trainer is left holding the best parameters.
inline ControllerResult controller_run(Trainer& trainer, const std::function<double(const ModelParams&)>& validate,
                                       const EarlyStopConfig& cfg,
                                       const std::function<void(const EpochStats&, std::optional<double>)>& on_epoch = {}) {
  if (cfg.interval < 1) throw ConfigError("eval.interval must be at least 1");
  ControllerResult out;
  const auto check = [&](std::size_t epoch) {
    const double m = validate(trainer.params());
    out.history.push_back({epoch, m});
    if (out.state.observe(m, epoch)) {
      out.best_params = trainer.params();
      out.best_optimizer = trainer.optimizer();
    }
    return m;
  };
  check(trainer.epoch());
  while (trainer.epoch() < cfg.max_epochs) {
    const auto stats = trainer.train_epoch();
    std::optional<double> metric;
    if (trainer.epoch() % cfg.interval == 0 || trainer.epoch() == cfg.max_epochs) metric = check(trainer.epoch());
    if (on_epoch) on_epoch(stats, metric);
    if (out.state.exhausted(cfg.patience)) {
      out.stopped_early = true;
      break;
    }
  }
  out.epochs_run = trainer.epoch();
  trainer.params() = out.best_params;
  trainer.optimizer() = out.best_optimizer;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::array<char, 8> kCheckpointMagic = {'M', 'U', 'K', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;  // resolved run configuration
  ModelParams params;
  OptimizerState optimizer;
  std::string rng_state;
  std::uint64_t epoch = 0;
  EarlyStopState early_stop;
  std::string neighbor_index;  // truncated sampler state, empty if unused

  bool operator==(const Checkpoint&) const = default;
};

namespace detail {

inline void write_string(std::ostream& os, const std::string& s) {
  io::write_le<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const auto n = io::read_le<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 32)) throw FormatError("string field too large");
  std::string s(n, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("unexpected end of file");
  return s;
}

template <typename T>
void write_vector(std::ostream& os, const std::vector<T>& v) {
  io::write_le<std::uint64_t>(os, v.size());
  for (const auto& x : v) io::write_le<T>(os, x);
}

template <typename T>
std::vector<T> read_vector(std::istream& is) {
  const auto n = io::read_le<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 36)) throw FormatError("vector field too large");
  std::vector<T> v(n);
  for (auto& x : v) x = io::read_le<T>(is);
  return v;
}

}  // namespace detail

// Layout: magic, version, config digest, config text, model header, one
// MUKG embedding block per table, optimizer state, RNG state, epoch,
// early-stop state, truncated-sampler index, then an FNV-1a checksum of
// all preceding bytes.
inline std::string serialize_checkpoint(const Checkpoint& c) {
  std::ostringstream os(std::ios::binary);
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  io::write_le<std::uint32_t>(os, kCheckpointVersion);
  io::write_le<std::uint64_t>(os, fnv1a(c.config_text));
  detail::write_string(os, c.config_text);

  const auto& p = c.params;
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.config.kind));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.config.norm));
  io::write_le<std::uint64_t>(os, p.config.dims.dim);
  io::write_le<std::uint64_t>(os, p.config.dims.rel_dim);
  io::write_le<std::uint64_t>(os, p.config.dims.complex_dim);
  io::write_le<std::uint64_t>(os, p.entity_count);
  io::write_le<std::uint64_t>(os, p.relation_count);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.tables.size()));
  for (const auto& t : p.tables) {
    detail::write_string(os, t.name);
    io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.key));
    write_embeddings_bin(os, t);
  }

  const auto& o = c.optimizer;
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(o.kind));
  for (double v : {o.lr, o.beta1, o.beta2, o.eps}) io::write_le<double>(os, v);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(o.first.size()));
  for (const auto& v : o.first) detail::write_vector(os, v);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(o.second.size()));
  for (const auto& v : o.second) detail::write_vector(os, v);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(o.row_steps.size()));
  for (const auto& v : o.row_steps) detail::write_vector(os, v);

  detail::write_string(os, c.rng_state);
  io::write_le<std::uint64_t>(os, c.epoch);
  io::write_le<double>(os, c.early_stop.best);
  io::write_le<std::uint64_t>(os, c.early_stop.best_epoch);
  io::write_le<std::uint64_t>(os, c.early_stop.bad_evals);
  detail::write_string(os, c.neighbor_index);

  std::string body = os.str();
  std::ostringstream tail(std::ios::binary);
  io::write_le<std::uint64_t>(tail, fnv1a(body.data(), body.size()));
  return body + tail.str();
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 12 ||
      !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const std::size_t body_size = bytes.size() - 8;
  std::istringstream tail(bytes.substr(body_size), std::ios::binary);
  if (io::read_le<std::uint64_t>(tail) != fnv1a(bytes.data(), body_size)) {
    throw FormatError("checkpoint checksum mismatch");
  }
  std::istringstream is(bytes.substr(0, body_size), std::ios::binary);
  is.ignore(kCheckpointMagic.size());
  if (io::read_le<std::uint32_t>(is) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  Checkpoint c;
  const auto digest = io::read_le<std::uint64_t>(is);
  c.config_text = detail::read_string(is);
  if (digest != fnv1a(c.config_text)) throw FormatError("checkpoint config digest mismatch");

  auto& p = c.params;
  const auto kind = io::read_le<std::uint32_t>(is);
  const auto norm = io::read_le<std::uint32_t>(is);
  if (kind >= kAllModelKinds.size() || norm > 2) throw FormatError("invalid model header");
  p.config.kind = static_cast<ModelKind>(kind);
  p.config.norm = static_cast<Norm>(norm);
  p.config.dims.dim = io::read_le<std::uint64_t>(is);
  p.config.dims.rel_dim = io::read_le<std::uint64_t>(is);
  p.config.dims.complex_dim = io::read_le<std::uint64_t>(is);
  p.entity_count = io::read_le<std::uint64_t>(is);
  p.relation_count = io::read_le<std::uint64_t>(is);
  const auto n_tables = io::read_le<std::uint32_t>(is);
  if (n_tables > kMaxTables) throw FormatError("too many parameter tables");
  for (std::uint32_t i = 0; i < n_tables; ++i) {
    auto name = detail::read_string(is);
    const auto key = io::read_le<std::uint8_t>(is);
    Table t = read_embeddings_bin(is);
    t.name = std::move(name);
    t.key = static_cast<RowKey>(key);
    const auto expected = t.key == RowKey::kEntity ? p.entity_count : p.relation_count;
    if (key > 1 || t.rows != expected) throw FormatError("parameter table shape mismatch");
    p.tables.push_back(std::move(t));
  }

  auto& o = c.optimizer;
  const auto okind = io::read_le<std::uint32_t>(is);
  if (okind > 2) throw FormatError("invalid optimizer kind");
  o.kind = static_cast<OptimizerKind>(okind);
  o.lr = io::read_le<double>(is);
  o.beta1 = io::read_le<double>(is);
  o.beta2 = io::read_le<double>(is);
  o.eps = io::read_le<double>(is);
  for (auto* vecs : {&o.first, &o.second}) {
    const auto n = io::read_le<std::uint32_t>(is);
    if (n > kMaxTables) throw FormatError("too many optimizer blocks");
    for (std::uint32_t i = 0; i < n; ++i) vecs->push_back(detail::read_vector<double>(is));
  }
  const auto n_steps = io::read_le<std::uint32_t>(is);
  if (n_steps > kMaxTables) throw FormatError("too many optimizer blocks");
  for (std::uint32_t i = 0; i < n_steps; ++i) o.row_steps.push_back(detail::read_vector<std::uint32_t>(is));

  c.rng_state = detail::read_string(is);
  c.epoch = io::read_le<std::uint64_t>(is);
  c.early_stop.best = io::read_le<double>(is);
  c.early_stop.best_epoch = io::read_le<std::uint64_t>(is);
  c.early_stop.bad_evals = io::read_le<std::uint64_t>(is);
  c.neighbor_index = detail::read_string(is);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto bytes = serialize_checkpoint(c);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

inline Checkpoint make_checkpoint(const Trainer& t, std::string config_text, EarlyStopState es = {}) {
  return {std::move(config_text), t.params(), t.optimizer(), rng_state(t.rng()), t.epoch(), es,
          t.neighbor_index_bytes()};
}

inline void restore(Trainer& t, const Checkpoint& c) {
  if (c.params.config != t.params().config || c.params.entity_count != t.params().entity_count ||
      c.params.relation_count != t.params().relation_count) {
    throw FormatError("checkpoint does not match the model configuration");
  }
  t.params() = c.params;
  t.optimizer() = c.optimizer;
  set_rng_state(t.rng(), c.rng_state);
  t.set_epoch(c.epoch);
  t.set_neighbor_index_bytes(c.neighbor_index);
}

}  // namespace mukg
