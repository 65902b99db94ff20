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
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mukg/error.hpp"
#include "mukg/kgdata.hpp"
#include "mukg/random.hpp"

namespace mukg {

enum class ModelKind {
  kTransE,
  kTransH,
  kTransR,
  kTransD,
  kRescal,
  kDistMult,
  kComplEx,
  kHolE,
  kAnalogy,
  kSimplE,
  kRotatE,
};

inline constexpr std::array<ModelKind, 11> kAllModelKinds = {
    ModelKind::kTransE,   ModelKind::kTransH,  ModelKind::kTransR, ModelKind::kTransD,
    ModelKind::kRescal,   ModelKind::kDistMult, ModelKind::kComplEx, ModelKind::kHolE,
    ModelKind::kAnalogy,  ModelKind::kSimplE,  ModelKind::kRotatE};

enum class Norm { kL1, kL2, kL2Squared };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kTransE: return "transe";
    case ModelKind::kTransH: return "transh";
    case ModelKind::kTransR: return "transr";
    case ModelKind::kTransD: return "transd";
    case ModelKind::kRescal: return "rescal";
    case ModelKind::kDistMult: return "distmult";
    case ModelKind::kComplEx: return "complex";
    case ModelKind::kHolE: return "hole";
    case ModelKind::kAnalogy: return "analogy";
    case ModelKind::kSimplE: return "simple";
    case ModelKind::kRotatE: return "rotate";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto k : kAllModelKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::string_view to_string(Norm n) {
  switch (n) {
    case Norm::kL1: return "l1";
    case Norm::kL2: return "l2";
    case Norm::kL2Squared: return "l2sq";
  }
  return "?";
}

inline std::optional<Norm> parse_norm(std::string_view s) {
  if (s == "l1") return Norm::kL1;
  if (s == "l2") return Norm::kL2;
  if (s == "l2sq") return Norm::kL2Squared;
  return std::nullopt;
}

inline bool is_translational(ModelKind k) {
  return k == ModelKind::kTransE || k == ModelKind::kTransH || k == ModelKind::kTransR ||
         k == ModelKind::kTransD;
}

// Scores are distances negated, so every kind ranks higher = more plausible.
inline bool is_distance_based(ModelKind k) { return is_translational(k) || k == ModelKind::kRotatE; }

struct ModelDims {
  std::size_t dim = 100;
  std::size_t rel_dim = 0;      // TransR relation space; 0 = dim
  std::size_t complex_dim = 0;  // Analogy complex block; 0 = half of dim, rounded to even

  bool operator==(const ModelDims&) const = default;
};

enum class RowKey : std::uint8_t { kEntity, kRelation };

inline constexpr std::size_t kMaxTables = 4;

struct Table {
  std::string name;
  RowKey key = RowKey::kEntity;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  bool operator==(const Table&) const = default;
};

struct ModelConfig {
  ModelKind kind = ModelKind::kTransE;
  Norm norm = Norm::kL2;
  ModelDims dims;

  std::size_t dim() const { return dims.dim; }
  std::size_t rel_dim() const { return dims.rel_dim == 0 ? dims.dim : dims.rel_dim; }
  std::size_t complex_dim() const {
    if (dims.complex_dim != 0) return dims.complex_dim;
    return (dims.dim / 2) & ~std::size_t{1};
  }

  bool operator==(const ModelConfig&) const = default;
};

// Embedding tables plus the kind they belong to. Table 0 is always the
// entity table and table 1 the relation table.
struct ModelParams {
  ModelConfig config;
  std::size_t entity_count = 0;
  std::size_t relation_count = 0;
  std::vector<Table> tables;

  ModelKind kind() const { return config.kind; }
  Table& entities() { return tables[0]; }
  const Table& entities() const { return tables[0]; }
  Table& relations() { return tables[1]; }
  const Table& relations() const { return tables[1]; }

  const Table* find(std::string_view name) const {
    for (const auto& t : tables)
      if (t.name == name) return &t;
    return nullptr;
  }

  bool operator==(const ModelParams&) const = default;
};

struct TableLayout {
  std::string name;
  RowKey key;
  std::size_t cols;
};

inline void check_dims(const ModelConfig& c) {
  const auto d = c.dim();
  if (d == 0) throw ConfigError("embedding dimension must be positive");
  switch (c.kind) {
    case ModelKind::kComplEx:
    case ModelKind::kRotatE:
      if (d % 2 != 0) throw ConfigError(std::string(to_string(c.kind)) + " requires an even dimension");
      break;
    case ModelKind::kAnalogy:
      if (c.complex_dim() % 2 != 0 || c.complex_dim() > d)
        throw ConfigError("analogy complex block must be even and at most dim");
      break;
    case ModelKind::kTransR:
      if (c.rel_dim() == 0) throw ConfigError("transr relation dimension must be positive");
      break;
    default:
      break;
  }
}

inline std::vector<TableLayout> table_layout(const ModelConfig& c) {
  const auto d = c.dim();
  switch (c.kind) {
    case ModelKind::kTransH:
      return {{"ent", RowKey::kEntity, d}, {"rel", RowKey::kRelation, d}, {"rel_normal", RowKey::kRelation, d}};
    case ModelKind::kTransR:
      return {{"ent", RowKey::kEntity, d},
              {"rel", RowKey::kRelation, c.rel_dim()},
              {"rel_proj", RowKey::kRelation, c.rel_dim() * d}};
    case ModelKind::kTransD:
      return {{"ent", RowKey::kEntity, d},
              {"rel", RowKey::kRelation, d},
              {"ent_proj", RowKey::kEntity, d},
              {"rel_proj", RowKey::kRelation, d}};
    case ModelKind::kRescal:
      return {{"ent", RowKey::kEntity, d}, {"rel", RowKey::kRelation, d * d}};
    case ModelKind::kSimplE:
      return {{"ent", RowKey::kEntity, d},
              {"rel", RowKey::kRelation, d},
              {"ent_tail", RowKey::kEntity, d},
              {"rel_inv", RowKey::kRelation, d}};
    case ModelKind::kRotatE:
      return {{"ent", RowKey::kEntity, d}, {"rel", RowKey::kRelation, d / 2}};
    default:
      return {{"ent", RowKey::kEntity, d}, {"rel", RowKey::kRelation, d}};
  }
}

// Row views touched by one triple: for each table, the head and tail rows
// (entity-keyed tables) or the relation row (relation-keyed tables).
template <typename T>
struct TripleRowsT {
  std::array<std::span<T>, kMaxTables> head{};
  std::array<std::span<T>, kMaxTables> tail{};
  std::array<std::span<T>, kMaxTables> rel{};
};

using TripleRows = TripleRowsT<const double>;
using TripleGradRows = TripleRowsT<double>;

inline TripleRows rows_of(const ModelParams& p, const Triple& t) {
  if (t.head >= p.entity_count || t.tail >= p.entity_count || t.relation >= p.relation_count) {
    throw DataError("triple id out of range for model");
  }
  TripleRows rows;
  for (std::size_t i = 0; i < p.tables.size(); ++i) {
    const auto& tab = p.tables[i];
    if (tab.key == RowKey::kEntity) {
      rows.head[i] = tab.row(t.head);
      rows.tail[i] = tab.row(t.tail);
    } else {
      rows.rel[i] = tab.row(t.relation);
    }
  }
  return rows;
}

namespace kernel {

using CSpan = std::span<const double>;
using MSpan = std::span<double>;

inline double dot(CSpan a, CSpan b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2(CSpan a) { return std::sqrt(dot(a, a)); }

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double norm_value(Norm n, CSpan x) {
  switch (n) {
    case Norm::kL1: {
      double s = 0.0;
      for (double v : x) s += std::abs(v);
      return s;
    }
    case Norm::kL2: return l2(x);
    case Norm::kL2Squared: return dot(x, x);
  }
  return 0.0;
}

// Writes ∂‖x‖/∂x into out. Subgradient 0 at the L1 kink and at x = 0 for L2.
inline void norm_grad(Norm n, CSpan x, MSpan out) {
  switch (n) {
    case Norm::kL1:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = sign(x[i]);
      return;
    case Norm::kL2: {
      const double len = l2(x);
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = len > 0.0 ? x[i] / len : 0.0;
      return;
    }
    case Norm::kL2Squared:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = 2.0 * x[i];
      return;
  }
}

inline void axpy(double a, CSpan x, MSpan y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Scratch buffers sized on first use; one per thread.
struct Scratch {
  std::vector<double> a, b, c, d;

  MSpan take(std::vector<double>& v, std::size_t n) {
    if (v.size() < n) v.resize(n);
    std::fill_n(v.begin(), n, 0.0);
    return {v.data(), n};
  }
};

inline Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

// (h, r, t) → Re(Σ h r conj(t)) on complex views [re | im] of length 2m.
inline double complex_trilinear(CSpan h, CSpan r, CSpan t) {
  const std::size_t m = h.size() / 2;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = h[i], b = h[m + i], c = r[i], d = r[m + i], e = t[i], f = t[m + i];
    s += a * c * e + b * c * f + a * d * f - b * d * e;
  }
  return s;
}

inline void complex_trilinear_grad(CSpan h, CSpan r, CSpan t, double w, MSpan gh, MSpan gr,
                                   MSpan gt) {
  const std::size_t m = h.size() / 2;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = h[i], b = h[m + i], c = r[i], d = r[m + i], e = t[i], f = t[m + i];
    if (!gh.empty()) {
      gh[i] += w * (c * e + d * f);
      gh[m + i] += w * (c * f - d * e);
    }
    if (!gr.empty()) {
      gr[i] += w * (a * e + b * f);
      gr[m + i] += w * (a * f - b * e);
    }
    if (!gt.empty()) {
      gt[i] += w * (a * c - b * d);
      gt[m + i] += w * (b * c + a * d);
    }
  }
}

inline double trilinear(CSpan h, CSpan r, CSpan t) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * r[i] * t[i];
  return s;
}

inline void trilinear_grad(CSpan h, CSpan r, CSpan t, double w, MSpan gh, MSpan gr, MSpan gt) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!gh.empty()) gh[i] += w * r[i] * t[i];
    if (!gr.empty()) gr[i] += w * h[i] * t[i];
    if (!gt.empty()) gt[i] += w * h[i] * r[i];
  }
}

// (h ⋆ t)_k = Σ_i h_i t_{(i+k) mod d}
inline double circular_correlation_at(CSpan h, CSpan t, std::size_t k) {
  const std::size_t d = h.size();
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    std::size_t j = i + k;
    if (j >= d) j -= d;
    s += h[i] * t[j];
  }
  return s;
}

// Σ_k r_k (h ⋆ t)_k with gradients when `grad` is set.
inline double hole(CSpan h, CSpan r, CSpan t, const TripleGradRows* grad, double w) {
  const std::size_t d = h.size();
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double corr = circular_correlation_at(h, t, k);
    s += r[k] * corr;
    if (grad) grad->rel[1][k] += w * corr;
  }
  if (grad) {
    auto gh = grad->head[0];
    auto gt = grad->tail[0];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        std::size_t j = i + k;
        if (j >= d) j -= d;
        gh[i] += w * r[k] * t[j];
        gt[j] += w * r[k] * h[i];
      }
    }
  }
  return s;
}

}  // namespace kernel

// Score of the triple whose rows are given; when `grad` is non-null, adds
// w · ∂score/∂row into the matching gradient rows.
inline double score_rows(const ModelConfig& cfg, const TripleRows& x, const TripleGradRows* grad = nullptr,
                         double w = 1.0) {
  using namespace kernel;
  auto& sc = scratch();
  const auto h = x.head[0];
  const auto t = x.tail[0];
  const auto r = x.rel[1];
  switch (cfg.kind) {
    case ModelKind::kTransE: {
      auto diff = sc.take(sc.a, h.size());
      for (std::size_t i = 0; i < h.size(); ++i) diff[i] = h[i] + r[i] - t[i];
      const double s = -norm_value(cfg.norm, diff);
      if (grad) {
        auto g = sc.take(sc.b, h.size());
        norm_grad(cfg.norm, diff, g);
        axpy(-w, g, grad->head[0]);
        axpy(-w, g, grad->rel[1]);
        axpy(w, g, grad->tail[0]);
      }
      return s;
    }
    case ModelKind::kTransH: {
      const auto wn = x.rel[2];
      const std::size_t d = h.size();
      auto u = sc.take(sc.a, d);
      for (std::size_t i = 0; i < d; ++i) u[i] = h[i] - t[i];
      const double a = dot(wn, u);
      auto diff = sc.take(sc.b, d);
      for (std::size_t i = 0; i < d; ++i) diff[i] = u[i] - a * wn[i] + r[i];
      const double s = -norm_value(cfg.norm, diff);
      if (grad) {
        auto g = sc.take(sc.c, d);
        norm_grad(cfg.norm, diff, g);
        for (auto& v : g) v = -v;  // ∂s/∂diff
        const double wg = dot(wn, g);
        for (std::size_t i = 0; i < d; ++i) {
          const double gu = g[i] - wn[i] * wg;
          grad->head[0][i] += w * gu;
          grad->tail[0][i] -= w * gu;
          grad->rel[1][i] += w * g[i];
          grad->rel[2][i] += w * (-wg * u[i] - a * g[i]);
        }
      }
      return s;
    }
    case ModelKind::kTransR: {
      const auto m = x.rel[2];
      const std::size_t de = h.size();
      const std::size_t dr = r.size();
      auto u = sc.take(sc.a, de);
      for (std::size_t j = 0; j < de; ++j) u[j] = h[j] - t[j];
      auto diff = sc.take(sc.b, dr);
      for (std::size_t i = 0; i < dr; ++i) diff[i] = dot(m.subspan(i * de, de), u) + r[i];
      const double s = -norm_value(cfg.norm, diff);
      if (grad) {
        auto g = sc.take(sc.c, dr);
        norm_grad(cfg.norm, diff, g);
        for (auto& v : g) v = -v;
        for (std::size_t i = 0; i < dr; ++i) {
          grad->rel[1][i] += w * g[i];
          const double gi = w * g[i];
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < de; ++j) {
            grad->head[0][j] += gi * m[i * de + j];
            grad->tail[0][j] -= gi * m[i * de + j];
            grad->rel[2][i * de + j] += gi * u[j];
          }
        }
      }
      return s;
    }
    case ModelKind::kTransD: {
      const auto hp = x.head[2];
      const auto tp = x.tail[2];
      const auto rp = x.rel[3];
      const std::size_t d = h.size();
      const double ch = dot(hp, h);
      const double ct = dot(tp, t);
      auto diff = sc.take(sc.a, d);
      for (std::size_t i = 0; i < d; ++i) diff[i] = h[i] - t[i] + (ch - ct) * rp[i] + r[i];
      const double s = -norm_value(cfg.norm, diff);
      if (grad) {
        auto g = sc.take(sc.b, d);
        norm_grad(cfg.norm, diff, g);
        for (auto& v : g) v = -v;
        const double rg = dot(rp, g);
        for (std::size_t i = 0; i < d; ++i) {
          grad->head[0][i] += w * (g[i] + rg * hp[i]);
          grad->tail[0][i] += w * (-g[i] - rg * tp[i]);
          grad->head[2][i] += w * rg * h[i];
          grad->tail[2][i] += w * (-rg * t[i]);
          grad->rel[3][i] += w * (ch - ct) * g[i];
          grad->rel[1][i] += w * g[i];
        }
      }
      return s;
    }
    case ModelKind::kRescal: {
      const std::size_t d = h.size();
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += h[i] * dot(r.subspan(i * d, d), t);
      if (grad) {
        for (std::size_t i = 0; i < d; ++i) {
          const auto mi = r.subspan(i * d, d);
          grad->head[0][i] += w * dot(mi, t);
          for (std::size_t j = 0; j < d; ++j) {
            grad->tail[0][j] += w * h[i] * mi[j];
            grad->rel[1][i * d + j] += w * h[i] * t[j];
          }
        }
      }
      return s;
    }
    case ModelKind::kDistMult: {
      if (grad) trilinear_grad(h, r, t, w, grad->head[0], grad->rel[1], grad->tail[0]);
      return trilinear(h, r, t);
    }
    case ModelKind::kComplEx: {
      if (grad) complex_trilinear_grad(h, r, t, w, grad->head[0], grad->rel[1], grad->tail[0]);
      return complex_trilinear(h, r, t);
    }
    case ModelKind::kHolE:
      return hole(h, r, t, grad, w);
    case ModelKind::kAnalogy: {
      const std::size_t dc = cfg.complex_dim();
      const std::size_t dm = h.size() - dc;
      double s = trilinear(h.first(dm), r.first(dm), t.first(dm)) +
                 complex_trilinear(h.subspan(dm), r.subspan(dm), t.subspan(dm));
      if (grad) {
        trilinear_grad(h.first(dm), r.first(dm), t.first(dm), w, grad->head[0].first(dm),
                       grad->rel[1].first(dm), grad->tail[0].first(dm));
        complex_trilinear_grad(h.subspan(dm), r.subspan(dm), t.subspan(dm), w, grad->head[0].subspan(dm),
                               grad->rel[1].subspan(dm), grad->tail[0].subspan(dm));
      }
      return s;
    }
    case ModelKind::kSimplE: {
      const auto h_tail = x.head[2];
      const auto t_tail = x.tail[2];
      const auto r_inv = x.rel[3];
      const double s = 0.5 * (trilinear(h, r, t_tail) + trilinear(t, r_inv, h_tail));
      if (grad) {
        trilinear_grad(h, r, t_tail, 0.5 * w, grad->head[0], grad->rel[1], grad->tail[2]);
        trilinear_grad(t, r_inv, h_tail, 0.5 * w, grad->tail[0], grad->rel[3], grad->head[2]);
      }
      return s;
    }
    case ModelKind::kRotatE: {
      const std::size_t m = h.size() / 2;
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = h[i], b = h[m + i], e = t[i], f = t[m + i];
        const double cs = std::cos(r[i]), sn = std::sin(r[i]);
        const double qre = a * cs - b * sn;
        const double qim = a * sn + b * cs;
        const double dx = qre - e, dy = qim - f;
        const double mod = std::sqrt(dx * dx + dy * dy);
        s -= mod;
        if (grad && mod > 0.0) {
          const double gx = -dx / mod * w, gy = -dy / mod * w;
          grad->head[0][i] += gx * cs + gy * sn;
          grad->head[0][m + i] += -gx * sn + gy * cs;
          grad->tail[0][i] -= gx;
          grad->tail[0][m + i] -= gy;
          grad->rel[1][i] += -gx * qim + gy * qre;
        }
      }
      return s;
    }
  }
  return 0.0;
}

inline double score(const ModelParams& p, const Triple& t) {
  return score_rows(p.config, rows_of(p, t));
}

// Sparse gradient: rows keyed by (table, row id), kept in first-touch order.
class SparseGrad {
 public:
  struct Entry {
    std::uint32_t table;
    Id row;
    std::size_t offset;
    std::size_t cols;
  };

  // Zero-initialized on first use. Adding a row may invalidate spans
  // returned earlier.
  std::span<double> row(std::uint32_t table, Id id, std::size_t cols) {
    const std::uint64_t key = (std::uint64_t{table} << 32) | id;
    if (auto it = index_.find(key); it != index_.end()) {
      const auto& e = entries_[it->second];
      return {values_.data() + e.offset, e.cols};
    }
    const std::size_t offset = values_.size();
    values_.resize(offset + cols, 0.0);
    index_.emplace(key, entries_.size());
    entries_.push_back({table, id, offset, cols});
    return {values_.data() + offset, cols};
  }

  const double* find(std::uint32_t table, Id id) const {
    const std::uint64_t key = (std::uint64_t{table} << 32) | id;
    if (auto it = index_.find(key); it != index_.end()) return values_.data() + entries_[it->second].offset;
    return nullptr;
  }

  std::span<const double> values(const Entry& e) const { return {values_.data() + e.offset, e.cols}; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  void clear() {
    entries_.clear();
    index_.clear();
    values_.clear();
  }

  // Adds every row of `other` into this gradient.
  void merge(const SparseGrad& other) {
    for (const auto& e : other.entries_) {
      auto dst = row(e.table, e.row, e.cols);
      const auto src = other.values(e);
      for (std::size_t i = 0; i < e.cols; ++i) dst[i] += src[i];
    }
  }

 private:
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::vector<Entry> entries_;
  std::vector<double> values_;
};

// Gradient rows for the triple inside `out`. Head and tail of the same
// entity share one row, so their contributions add.
inline TripleGradRows grad_rows_of(const ModelParams& p, const Triple& t, SparseGrad& out) {
  TripleGradRows g;
  // Two passes: creating a row may move storage, so spans are taken only
  // once every row exists.
  for (int pass = 0; pass < 2; ++pass)
  for (std::uint32_t i = 0; i < p.tables.size(); ++i) {
    const auto& tab = p.tables[i];
    if (tab.key == RowKey::kEntity) {
      g.head[i] = out.row(i, t.head, tab.cols);
      g.tail[i] = out.row(i, t.tail, tab.cols);
    } else {
      g.rel[i] = out.row(i, t.relation, tab.cols);
    }
  }
  return g;
}

// Adds w · ∂score/∂θ for the triple into `out` and returns the score.
inline double accumulate_grad(const ModelParams& p, const Triple& t, double w, SparseGrad& out) {
  const auto rows = rows_of(p, t);
  const auto g = grad_rows_of(p, t, out);
  return score_rows(p.config, rows, &g, w);
}

inline SparseGrad grad(const ModelParams& p, const Triple& t) {
  SparseGrad g;
  accumulate_grad(p, t, 1.0, g);
  return g;
}

// ---------------------------------------------------------------------------
// Initialization and constraints

namespace detail {

inline void normalize_row(std::span<double> row) {
  const double len = kernel::l2(row);
  if (len > 0.0)
    for (auto& v : row) v /= len;
}

// Rows already within this of a constraint are left bit-for-bit alone, so
// re-applying a constraint (or a zero step) never perturbs parameters.
inline constexpr double kConstraintSlack = 1e-12;

// Projects onto the unit ball.
inline void clip_row(std::span<double> row) {
  const double len = kernel::l2(row);
  if (len > 1.0 + kConstraintSlack)
    for (auto& v : row) v /= len;
}

inline void project_relation_off_normal(std::span<double> r, std::span<double> normal) {
  const double len = kernel::l2(normal);
  if (len > 0.0 && std::abs(len - 1.0) > kConstraintSlack)
    for (auto& v : normal) v /= len;
  const double a = kernel::dot(normal, r);
  if (std::abs(a) > kConstraintSlack * kernel::l2(r))
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= a * normal[i];
}

}  // namespace detail

inline ModelParams init_params(const ModelConfig& cfg, std::size_t n_entities, std::size_t n_relations,
                               std::uint64_t seed) {
  check_dims(cfg);
  if (n_entities == 0 || n_relations == 0) throw ConfigError("model needs at least one entity and relation");
  ModelParams p;
  p.config = cfg;
  p.entity_count = n_entities;
  p.relation_count = n_relations;
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim()));
  const auto layout = table_layout(cfg);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    Table tab{layout[i].name, layout[i].key, layout[i].key == RowKey::kEntity ? n_entities : n_relations,
              layout[i].cols, {}};
    tab.data.resize(tab.rows * tab.cols);
    Rng rng = make_rng(seed, 0x7ab1e000 + i);
    const bool phases = cfg.kind == ModelKind::kRotatE && i == 1;
    for (auto& v : tab.data)
      v = phases ? uniform_real(rng, -std::numbers::pi, std::numbers::pi) : uniform_real(rng, -bound, bound);
    p.tables.push_back(std::move(tab));
  }
  if (is_translational(cfg.kind)) {
    for (std::size_t e = 0; e < n_entities; ++e) detail::normalize_row(p.entities().row(e));
  }
  if (cfg.kind == ModelKind::kTransH) {
    for (std::size_t r = 0; r < n_relations; ++r)
      detail::project_relation_off_normal(p.tables[1].row(r), p.tables[2].row(r));
  }
  return p;
}

// Per-row constraints of one entity / relation after an update.
inline void constrain_entity(ModelParams& p, Id e) {
  if (is_translational(p.kind())) detail::clip_row(p.entities().row(e));
}

inline void constrain_relation(ModelParams& p, Id r) {
  if (p.kind() == ModelKind::kTransH) detail::project_relation_off_normal(p.tables[1].row(r), p.tables[2].row(r));
}

inline void apply_constraints(ModelParams& p, std::span<const Id> entities, std::span<const Id> relations) {
  for (Id e : entities) constrain_entity(p, e);
  for (Id r : relations) constrain_relation(p, r);
}

// Constraints on every row touched by a sparse gradient.
inline void apply_constraints(ModelParams& p, const SparseGrad& touched) {
  for (const auto& e : touched.entries()) {
    if (e.table == 0) constrain_entity(p, e.row);
    if (e.table == 1) constrain_relation(p, e.row);
  }
}

// ---------------------------------------------------------------------------
// Batched scoring against every entity

namespace detail {

enum class Side { kTail, kHead };

inline void score_all(const ModelParams& p, Id fixed, Id r, Side side, std::span<double> out) {
  using namespace kernel;
  const auto& cfg = p.config;
  const auto& ent = p.entities();
  const std::size_t n = p.entity_count;
  const std::size_t d = cfg.dim();
  if (out.size() != n) throw DataError("score buffer has wrong size");
  if (fixed >= n || r >= p.relation_count) throw DataError("query id out of range for model");
  const auto e0 = ent.row(fixed);
  const auto rel = p.relations().row(r);
  const bool tail = side == Side::kTail;
  std::vector<double> q(d, 0.0);
  std::vector<double> tmp(std::max(d, cfg.rel_dim()), 0.0);

  // Σ_k q·row_k(candidate) over the entity table.
  const auto linear = [&](const Table& tab, std::span<const double> query, double scale, bool accumulate) {
    for (std::size_t c = 0; c < n; ++c) {
      const double v = scale * dot(tab.row(c), query);
      out[c] = accumulate ? out[c] + v : v;
    }
  };

  switch (cfg.kind) {
    case ModelKind::kTransE: {
      // tail: −‖(h + r) − t‖, head: −‖h − (t − r)‖
      for (std::size_t i = 0; i < d; ++i) q[i] = tail ? e0[i] + rel[i] : e0[i] - rel[i];
      for (std::size_t c = 0; c < n; ++c) {
        const auto x = ent.row(c);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = tail ? q[i] - x[i] : x[i] - q[i];
        out[c] = -norm_value(cfg.norm, std::span<const double>(tmp.data(), d));
      }
      return;
    }
    case ModelKind::kTransH: {
      const auto wn = p.tables[2].row(r);
      const double a = dot(wn, e0);
      for (std::size_t i = 0; i < d; ++i) {
        const double proj = e0[i] - a * wn[i];
        q[i] = tail ? proj + rel[i] : proj - rel[i];
      }
      for (std::size_t c = 0; c < n; ++c) {
        const auto x = ent.row(c);
        const double b = dot(wn, x);
        for (std::size_t i = 0; i < d; ++i) {
          const double proj = x[i] - b * wn[i];
          tmp[i] = tail ? q[i] - proj : proj - q[i];
        }
        out[c] = -norm_value(cfg.norm, std::span<const double>(tmp.data(), d));
      }
      return;
    }
    case ModelKind::kTransR: {
      const auto m = p.tables[2].row(r);
      const std::size_t dr = cfg.rel_dim();
      std::vector<double> qr(dr);
      for (std::size_t i = 0; i < dr; ++i) {
        const double proj = dot(m.subspan(i * d, d), e0);
        qr[i] = tail ? proj + rel[i] : proj - rel[i];
      }
      for (std::size_t c = 0; c < n; ++c) {
        const auto x = ent.row(c);
        for (std::size_t i = 0; i < dr; ++i) {
          const double proj = dot(m.subspan(i * d, d), x);
          tmp[i] = tail ? qr[i] - proj : proj - qr[i];
        }
        out[c] = -norm_value(cfg.norm, std::span<const double>(tmp.data(), dr));
      }
      return;
    }
    case ModelKind::kTransD: {
      const auto& eproj = p.tables[2];
      const auto rp = p.tables[3].row(r);
      const double c0 = dot(eproj.row(fixed), e0);
      for (std::size_t i = 0; i < d; ++i) {
        const double up = e0[i] + c0 * rp[i];
        q[i] = tail ? up + rel[i] : up - rel[i];
      }
      for (std::size_t c = 0; c < n; ++c) {
        const auto x = ent.row(c);
        const double cx = dot(eproj.row(c), x);
        for (std::size_t i = 0; i < d; ++i) {
          const double up = x[i] + cx * rp[i];
          tmp[i] = tail ? q[i] - up : up - q[i];
        }
        out[c] = -norm_value(cfg.norm, std::span<const double>(tmp.data(), d));
      }
      return;
    }
    case ModelKind::kRescal: {
      // tail: q_j = Σ_i h_i M_ij; head: q_i = Σ_j M_ij t_j
      for (std::size_t i = 0; i < d; ++i) {
        const auto mi = rel.subspan(i * d, d);
        if (tail) {
          for (std::size_t j = 0; j < d; ++j) q[j] += e0[i] * mi[j];
        } else {
          q[i] = dot(mi, e0);
        }
      }
      linear(ent, q, 1.0, false);
      return;
    }
    case ModelKind::kDistMult: {
      for (std::size_t i = 0; i < d; ++i) q[i] = e0[i] * rel[i];
      linear(ent, q, 1.0, false);
      return;
    }
    case ModelKind::kComplEx:
    case ModelKind::kAnalogy: {
      const std::size_t dc = cfg.kind == ModelKind::kComplEx ? d : cfg.complex_dim();
      const std::size_t dm = d - dc;
      for (std::size_t i = 0; i < dm; ++i) q[i] = e0[i] * rel[i];
      const std::size_t m = dc / 2;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = e0[dm + i], b = e0[dm + m + i], c = rel[dm + i], dd = rel[dm + m + i];
        if (tail) {
          q[dm + i] = a * c - b * dd;
          q[dm + m + i] = b * c + a * dd;
        } else {
          // here (a, b) is the fixed tail
          q[dm + i] = c * a + dd * b;
          q[dm + m + i] = c * b - dd * a;
        }
      }
      linear(ent, q, 1.0, false);
      return;
    }
    case ModelKind::kHolE: {
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          // tail: q_j = Σ_k r_k h_{(j−k) mod d}; head: q_i = Σ_k r_k t_{(i+k) mod d}
          const std::size_t idx = tail ? (j + d - k) % d : (j + k) % d;
          s += rel[k] * e0[idx];
        }
        q[j] = s;
      }
      linear(ent, q, 1.0, false);
      return;
    }
    case ModelKind::kSimplE: {
      const auto& ent_tail = p.tables[2];
      const auto rinv = p.tables[3].row(r);
      const auto e0_tail = ent_tail.row(fixed);
      std::vector<double> q2(d);
      for (std::size_t i = 0; i < d; ++i) {
        if (tail) {
          q[i] = e0[i] * rel[i];        // against candidate tail-role rows
          q2[i] = rinv[i] * e0_tail[i];  // against candidate head-role rows
        } else {
          q[i] = rel[i] * e0_tail[i];   // candidate head-role
          q2[i] = e0[i] * rinv[i];      // candidate tail-role
        }
      }
      if (tail) {
        linear(ent_tail, q, 0.5, false);
        linear(ent, q2, 0.5, true);
      } else {
        linear(ent, q, 0.5, false);
        linear(ent_tail, q2, 0.5, true);
      }
      return;
    }
    case ModelKind::kRotatE: {
      // tail: q = h∘r̂; head: |h∘r̂ − t| = |h − t∘conj(r̂)| since |r̂| = 1
      const std::size_t m = d / 2;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = e0[i], b = e0[m + i];
        const double cs = std::cos(rel[i]), sn = tail ? std::sin(rel[i]) : -std::sin(rel[i]);
        q[i] = a * cs - b * sn;
        q[m + i] = a * sn + b * cs;
      }
      for (std::size_t c = 0; c < n; ++c) {
        const auto x = ent.row(c);
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double dx = q[i] - x[i], dy = q[m + i] - x[m + i];
          s -= std::sqrt(dx * dx + dy * dy);
        }
        out[c] = s;
      }
      return;
    }
  }
}

}  // namespace detail

// v[t] = score(h, r, t) for every entity t.
inline void score_all_tails(const ModelParams& p, Id h, Id r, std::span<double> out) {
  detail::score_all(p, h, r, detail::Side::kTail, out);
}

inline std::vector<double> score_all_tails(const ModelParams& p, Id h, Id r) {
  std::vector<double> out(p.entity_count);
  score_all_tails(p, h, r, out);
  return out;
}

// v[h] = score(h, r, t) for every entity h.
inline void score_all_heads(const ModelParams& p, Id r, Id t, std::span<double> out) {
  detail::score_all(p, t, r, detail::Side::kHead, out);
}

inline std::vector<double> score_all_heads(const ModelParams& p, Id r, Id t) {
  std::vector<double> out(p.entity_count);
  score_all_heads(p, r, t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Embedding export

inline constexpr std::array<char, 4> kEmbeddingMagic = {'M', 'U', 'K', 'G'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

namespace io {

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw FormatError("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace io

// Little-endian block: "MUKG", u32 version, u64 n, u64 d, then n×d float64.
inline void write_embeddings_bin(std::ostream& os, const Table& tab) {
  os.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  io::write_le<std::uint32_t>(os, kEmbeddingVersion);
  io::write_le<std::uint64_t>(os, tab.rows);
  io::write_le<std::uint64_t>(os, tab.cols);
  for (double v : tab.data) io::write_le<double>(os, v);
}

inline Table read_embeddings_bin(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kEmbeddingMagic) throw FormatError("bad embedding magic");
  if (io::read_le<std::uint32_t>(is) != kEmbeddingVersion) throw FormatError("unsupported embedding version");
  Table tab;
  tab.rows = io::read_le<std::uint64_t>(is);
  tab.cols = io::read_le<std::uint64_t>(is);
  if (tab.cols != 0 && tab.rows > (std::uint64_t{1} << 40) / tab.cols) throw FormatError("embedding block too large");
  tab.data.resize(tab.rows * tab.cols);
  for (auto& v : tab.data) v = io::read_le<double>(is);
  return tab;
}

// `id<TAB>v1<TAB>…<TAB>vd`, shortest round-trip decimal form. With names,
// the first column holds names[id] instead of the id.
inline void write_embeddings_tsv(std::ostream& os, const Table& tab, std::span<const std::string> names = {}) {
  if (!names.empty() && names.size() != tab.rows) throw DataError("one name per embedding row is required");
  char buf[32];
  for (std::size_t i = 0; i < tab.rows; ++i) {
    if (names.empty()) {
      os << i;
    } else {
      os << names[i];
    }
    for (double v : tab.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      os << '\t';
      os.write(buf, res.ptr - buf);
    }
    os << '\n';
  }
}

}  // namespace mukg
