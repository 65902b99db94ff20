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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
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
#include "mukg/random.hpp"

namespace mukg {

using Id = std::uint32_t;

inline constexpr std::string_view kTypeRelation = "rdf:type";

struct RawTriple {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const RawTriple&) const = default;
};

struct Triple {
  Id head = 0;
  Id relation = 0;
  Id tail = 0;

  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t h = mix64(t.head);
    h = mix64(h ^ t.relation);
    return static_cast<std::size_t>(mix64(h ^ t.tail));
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                    : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Reads one `<iri>` token from the front of `s`, advancing it.
inline std::optional<std::string_view> take_iri(std::string_view& s) {
  s = trim(s);
  if (s.empty() || s.front() != '<') return std::nullopt;
  const auto close = s.find('>');
  if (close == std::string_view::npos) return std::nullopt;
  auto iri = s.substr(1, close - 1);
  s.remove_prefix(close + 1);
  return iri;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace detail

enum class TripleFormat { kTsv, kTtlSubset };

// Parses one triple per non-empty line. Duplicates are kept.
inline std::vector<RawTriple> parse_triples(std::istream& in, const std::string& source,
                                            TripleFormat format = TripleFormat::kTsv) {
  std::vector<RawTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (detail::trim(view).empty()) continue;
    RawTriple t;
    if (format == TripleFormat::kTsv) {
      if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
      const auto fields = detail::split_tabs(view);
      if (fields.size() != 3) {
        throw ParseError(source, lineno,
                         "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
      }
      t = {std::string(detail::trim(fields[0])), std::string(detail::trim(fields[1])),
           std::string(detail::trim(fields[2]))};
    } else {
      auto s = detail::trim(view);
      if (s.starts_with('#')) continue;
      auto subj = detail::take_iri(s);
      auto pred = detail::take_iri(s);
      auto obj = detail::take_iri(s);
      if (!subj || !pred || !obj || detail::trim(s) != ".") {
        throw ParseError(source, lineno, "expected `<s> <p> <o> .`");
      }
      t = {std::string(*subj), std::string(*pred), std::string(*obj)};
    }
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
      throw ParseError(source, lineno, "empty field");
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<RawTriple> load_triples(const std::filesystem::path& path,
                                           TripleFormat format = TripleFormat::kTsv) {
  auto in = detail::open_input(path);
  return parse_triples(in, path.string(), format);
}

// Format is picked from the extension: `.ttl` / `.nt` → line-oriented Turtle subset.
inline std::vector<RawTriple> load_triples_auto(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return load_triples(path, ext == ".ttl" || ext == ".nt" ? TripleFormat::kTtlSubset
                                                         : TripleFormat::kTsv);
}

// `entity1<TAB>entity2` per line.
inline std::vector<std::pair<std::string, std::string>> load_pairs(
    const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (detail::trim(view).empty()) continue;
    const auto fields = detail::split_tabs(view);
    if (fields.size() != 2) throw ParseError(path.string(), lineno, "expected 2 tab-separated fields");
    auto a = detail::trim(fields[0]);
    auto b = detail::trim(fields[1]);
    if (a.empty() || b.empty()) throw ParseError(path.string(), lineno, "empty field");
    out.emplace_back(a, b);
  }
  return out;
}

// Type assertions: `entity<TAB>rdf:type<TAB>type`; the two-column form
// `entity<TAB>type` is accepted as shorthand.
inline std::vector<RawTriple> load_type_assertions(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<RawTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (detail::trim(view).empty()) continue;
    const auto fields = detail::split_tabs(view);
    RawTriple t;
    if (fields.size() == 3) {
      t = {std::string(detail::trim(fields[0])), std::string(detail::trim(fields[1])),
           std::string(detail::trim(fields[2]))};
      if (t.relation != kTypeRelation) {
        throw ParseError(path.string(), lineno, "expected relation rdf:type, got " + t.relation);
      }
    } else if (fields.size() == 2) {
      t = {std::string(detail::trim(fields[0])), std::string(kTypeRelation),
           std::string(detail::trim(fields[1]))};
    } else {
      throw ParseError(path.string(), lineno, "expected `entity<TAB>rdf:type<TAB>type`");
    }
    if (t.head.empty() || t.tail.empty()) throw ParseError(path.string(), lineno, "empty field");
    out.push_back(std::move(t));
  }
  return out;
}

// Dense string <-> id mapping. Aliases map extra keys onto an existing id
// without changing the id's canonical (backward) name.
class SymbolTable {
 public:
  Id encode(std::string_view key) {
    if (auto it = forward_.find(std::string(key)); it != forward_.end()) return it->second;
    const auto id = static_cast<Id>(backward_.size());
    backward_.emplace_back(key);
    forward_.emplace(std::string(key), id);
    return id;
  }

  void alias(std::string_view key, Id id) { forward_.insert_or_assign(std::string(key), id); }

  std::optional<Id> find(std::string_view key) const {
    if (auto it = forward_.find(std::string(key)); it != forward_.end()) return it->second;
    return std::nullopt;
  }

  Id at(std::string_view key) const {
    if (auto id = find(key)) return *id;
    throw DataError("unknown symbol: " + std::string(key));
  }

  const std::string& decode(Id id) const {
    if (id >= backward_.size()) throw DataError("symbol id out of range: " + std::to_string(id));
    return backward_[id];
  }

  std::size_t size() const { return backward_.size(); }
  std::size_t key_count() const { return forward_.size(); }
  const std::vector<std::string>& names() const { return backward_; }
  const std::unordered_map<std::string, Id>& keys() const { return forward_; }

 private:
  std::unordered_map<std::string, Id> forward_;
  std::vector<std::string> backward_;
};

// Symbol keys carry their source-KG index so identical surface forms in
// different graphs never collide.
inline std::string namespaced(std::size_t kg, std::string_view name) {
  return std::to_string(kg) + ":" + std::string(name);
}

inline std::string_view surface_form(std::string_view key) {
  const auto colon = key.find(':');
  return colon == std::string_view::npos ? key : key.substr(colon + 1);
}

inline constexpr std::string_view kTypeNamespace = "type";

inline std::string type_key(std::string_view name) {
  return std::string(kTypeNamespace) + ":" + std::string(name);
}

struct Edge {
  Id relation;
  Id neighbor;
  bool outgoing;

  bool operator==(const Edge&) const = default;
};

// Integer-encoded triple store with a membership index and per-entity adjacency.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  KnowledgeGraph(std::size_t n_entities, std::size_t n_relations, std::span<const Triple> triples)
      : n_entities_(n_entities), n_relations_(n_relations), adjacency_(n_entities) {
    for (const auto& t : triples) add(t);
  }

  // Returns false for duplicates.
  bool add(const Triple& t) {
    if (t.head >= n_entities_ || t.tail >= n_entities_ || t.relation >= n_relations_) {
      throw DataError("triple id out of range");
    }
    if (!index_.insert(t).second) return false;
    triples_.push_back(t);
    adjacency_[t.head].push_back({t.relation, t.tail, true});
    adjacency_[t.tail].push_back({t.relation, t.head, false});
    return true;
  }

  bool contains(const Triple& t) const { return index_.contains(t); }

  std::size_t entity_count() const { return n_entities_; }
  std::size_t relation_count() const { return n_relations_; }
  std::size_t size() const { return triples_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }
  const TripleSet& index() const { return index_; }
  std::span<const Edge> edges(Id entity) const { return adjacency_.at(entity); }

  std::size_t out_degree(Id entity) const {
    return static_cast<std::size_t>(std::count_if(adjacency_.at(entity).begin(),
                                                  adjacency_.at(entity).end(),
                                                  [](const Edge& e) { return e.outgoing; }));
  }

 private:
  std::size_t n_entities_ = 0;
  std::size_t n_relations_ = 0;
  std::vector<Triple> triples_;
  TripleSet index_;
  std::vector<std::vector<Edge>> adjacency_;
};

struct SplitTriples {
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
};

struct RawSplit {
  std::vector<RawTriple> train;
  std::vector<RawTriple> valid;
  std::vector<RawTriple> test;
};

enum class Split { kTrain, kValid, kTest };
enum class IdMode { kUnique, kShared };

struct AlignedPair {
  Id left;
  Id right;
  Split split;

  bool operator==(const AlignedPair&) const = default;
};

struct RawAlignmentPair {
  std::size_t left_kg = 0;
  std::string left;
  std::size_t right_kg = 1;
  std::string right;
  Split split = Split::kTrain;
};

struct AlignmentSeed {
  std::vector<AlignedPair> pairs;

  std::vector<AlignedPair> of(Split s) const {
    std::vector<AlignedPair> out;
    for (const auto& p : pairs)
      if (p.split == s) out.push_back(p);
    return out;
  }
};

struct TypeAssertion {
  Id instance;
  Id type;

  bool operator==(const TypeAssertion&) const = default;
};

struct TypeAssertions {
  std::vector<TypeAssertion> train;
  std::vector<TypeAssertion> valid;
  std::vector<TypeAssertion> test;
  std::vector<Id> type_ids;  // entity ids that denote types, ascending
  Id type_relation = 0;
};

// Triples and entity membership of one source KG, in the dataset's id space.
struct KgPart {
  SplitTriples split;
  std::vector<Id> entity_ids;  // ascending
  std::vector<Id> relation_ids;
};

struct SplitReport {
  std::size_t dropped_valid = 0;
  std::size_t dropped_test = 0;

  bool empty() const { return dropped_valid == 0 && dropped_test == 0; }
};

// Two or more KGs in one id space, plus optional alignment, typing, and attribute data.
struct MultiSourceDataset {
  IdMode id_mode = IdMode::kUnique;
  SymbolTable entities;
  SymbolTable relations;
  std::vector<KgPart> kgs;
  AlignmentSeed alignment;
  std::optional<TypeAssertions> types;
  std::vector<std::vector<RawTriple>> attribute_triples;
  SplitReport split_report;
  std::size_t removed_overlap = 0;

  std::size_t entity_count() const { return entities.size(); }
  std::size_t relation_count() const { return relations.size(); }

  std::optional<Id> entity(std::size_t kg, std::string_view name) const {
    return entities.find(namespaced(kg, name));
  }

  std::vector<Triple> all_train() const {
    std::vector<Triple> out;
    TripleSet seen;
    for (const auto& kg : kgs)
      for (const auto& t : kg.split.train)
        if (seen.insert(t).second) out.push_back(t);
    if (types) {
      for (const auto& a : types->train) {
        Triple t{a.instance, types->type_relation, a.type};
        if (seen.insert(t).second) out.push_back(t);
      }
    }
    return out;
  }

  KnowledgeGraph train_graph() const {
    const auto train = all_train();
    return KnowledgeGraph(entity_count(), relation_count(), train);
  }
};

namespace detail {

inline std::vector<Id> sorted_unique(std::vector<Id> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

inline void dedupe(std::vector<Triple>& triples) {
  TripleSet seen;
  std::erase_if(triples, [&](const Triple& t) { return !seen.insert(t).second; });
}

inline void refresh_membership(KgPart& part) {
  std::vector<Id> ents;
  std::vector<Id> rels;
  for (const auto* set : {&part.split.train, &part.split.valid, &part.split.test}) {
    for (const auto& t : *set) {
      ents.push_back(t.head);
      ents.push_back(t.tail);
      rels.push_back(t.relation);
    }
  }
  part.entity_ids = sorted_unique(std::move(ents));
  part.relation_ids = sorted_unique(std::move(rels));
}

}  // namespace detail

// Drops valid/test triples whose entity or relation never occurs in train.
// Overlap between splits is a hard error.
inline SplitReport validate_split(SplitTriples& split) {
  const TripleSet train(split.train.begin(), split.train.end());
  const TripleSet valid(split.valid.begin(), split.valid.end());
  for (const auto& t : split.valid)
    if (train.contains(t)) throw DataError("valid triple also in train split");
  for (const auto& t : split.test) {
    if (train.contains(t)) throw DataError("test triple also in train split");
    if (valid.contains(t)) throw DataError("test triple also in valid split");
  }
  std::unordered_set<Id> seen_entities;
  std::unordered_set<Id> seen_relations;
  for (const auto& t : split.train) {
    seen_entities.insert(t.head);
    seen_entities.insert(t.tail);
    seen_relations.insert(t.relation);
  }
  const auto unseen = [&](const Triple& t) {
    return !seen_entities.contains(t.head) || !seen_entities.contains(t.tail) ||
           !seen_relations.contains(t.relation);
  };
  SplitReport report;
  report.dropped_valid = std::erase_if(split.valid, unseen);
  report.dropped_test = std::erase_if(split.test, unseen);
  return report;
}

// Every resource gets its own id; entity and relation keys are namespaced by
// KG index. Train triples are encoded first so trained ids come first.
inline MultiSourceDataset build_unique_ids(std::span<const RawSplit> kgs) {
  if (kgs.empty()) throw DataError("at least one KG is required");
  MultiSourceDataset ds;
  ds.id_mode = IdMode::kUnique;
  ds.kgs.resize(kgs.size());
  for (std::size_t k = 0; k < kgs.size(); ++k) {
    const auto encode = [&](const std::vector<RawTriple>& raw, std::vector<Triple>& out) {
      out.reserve(raw.size());
      for (const auto& t : raw) {
        const Id h = ds.entities.encode(namespaced(k, t.head));
        const Id r = ds.relations.encode(namespaced(k, t.relation));
        const Id tl = ds.entities.encode(namespaced(k, t.tail));
        out.push_back({h, r, tl});
      }
      detail::dedupe(out);
    };
    encode(kgs[k].train, ds.kgs[k].split.train);
    encode(kgs[k].valid, ds.kgs[k].split.valid);
    encode(kgs[k].test, ds.kgs[k].split.test);
    detail::refresh_membership(ds.kgs[k]);
  }
  return ds;
}

inline MultiSourceDataset build_unique_ids(std::span<const std::vector<RawTriple>> kgs) {
  std::vector<RawSplit> splits;
  for (const auto& kg : kgs) splits.push_back({kg, {}, {}});
  return build_unique_ids(std::span<const RawSplit>(splits));
}

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  Id find(Id x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Smaller id becomes the root, so roots are the class minimum.
  void unite(Id a, Id b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<Id> parent_;
};

inline Id resolve_pair_entity(const MultiSourceDataset& ds, std::size_t kg, const std::string& name,
                              const RawAlignmentPair& pair) {
  auto id = ds.entity(kg, name);
  if (!id) {
    throw DataError("alignment pair (" + pair.left + ", " + pair.right +
                    ") references unknown entity " + name + " in KG " + std::to_string(kg));
  }
  return *id;
}

inline void check_alignment(const AlignmentSeed& seed, IdMode mode) {
  std::unordered_set<std::uint64_t> all;
  for (auto split : {Split::kTrain, Split::kValid, Split::kTest}) {
    std::unordered_set<Id> left;
    std::unordered_set<Id> right;
    for (const auto& p : seed.pairs) {
      if (p.split != split) continue;
      const bool collapsed = mode == IdMode::kShared && split == Split::kTrain;
      if (!collapsed && (!left.insert(p.left).second || !right.insert(p.right).second)) {
        throw DataError("entity occurs in two alignment pairs of the same split");
      }
      if (!all.insert((std::uint64_t{p.left} << 32) | p.right).second) {
        throw DataError("alignment pair occurs in more than one split");
      }
    }
  }
}

}  // namespace detail

// Resolves raw alignment pairs against a unique-id dataset.
inline AlignmentSeed resolve_alignment(const MultiSourceDataset& ds,
                                       std::span<const RawAlignmentPair> raw) {
  AlignmentSeed seed;
  for (const auto& p : raw) {
    seed.pairs.push_back({detail::resolve_pair_entity(ds, p.left_kg, p.left, p),
                          detail::resolve_pair_entity(ds, p.right_kg, p.right, p), p.split});
  }
  detail::check_alignment(seed, IdMode::kUnique);
  return seed;
}

// Merges the KGs into one joint graph: every train alignment pair collapses
// to a single id (union-find closure, canonical member = smallest unique id),
// then ids are compacted. Relation vocabularies stay disjoint.
inline MultiSourceDataset build_shared_ids(std::span<const RawSplit> kgs,
                                           std::span<const RawAlignmentPair> alignment) {
  MultiSourceDataset unique = build_unique_ids(kgs);
  const AlignmentSeed seed = resolve_alignment(unique, alignment);

  const std::size_t n = unique.entity_count();
  detail::UnionFind uf(n);
  for (const auto& p : seed.pairs)
    if (p.split == Split::kTrain) uf.unite(p.left, p.right);

  std::vector<Id> remap(n);
  Id next = 0;
  for (Id e = 0; e < n; ++e) {
    const Id root = uf.find(e);
    remap[e] = root == e ? next++ : remap[root];
  }

  MultiSourceDataset ds;
  ds.id_mode = IdMode::kShared;
  ds.relations = std::move(unique.relations);
  for (Id e = 0; e < n; ++e)
    if (uf.find(e) == e) ds.entities.encode(unique.entities.decode(e));
  for (const auto& [key, id] : unique.entities.keys()) ds.entities.alias(key, remap[id]);

  ds.kgs = std::move(unique.kgs);
  for (auto& part : ds.kgs) {
    for (auto* set : {&part.split.train, &part.split.valid, &part.split.test}) {
      for (auto& t : *set) {
        t.head = remap[t.head];
        t.tail = remap[t.tail];
      }
      detail::dedupe(*set);
    }
    detail::refresh_membership(part);
  }
  for (const auto& p : seed.pairs) ds.alignment.pairs.push_back({remap[p.left], remap[p.right], p.split});
  ds.attribute_triples = std::move(unique.attribute_triples);
  return ds;
}

namespace detail {

// Overlap key: shared entity ids plus the relation's surface name. Relation
// ids stay KG-local, so exact id equality could never match across KGs.
class OverlapKeys {
 public:
  explicit OverlapKeys(const MultiSourceDataset& ds) {
    std::unordered_map<std::string, Id> by_name;
    relation_class_.reserve(ds.relation_count());
    for (const auto& key : ds.relations.names()) {
      const auto [it, inserted] =
          by_name.emplace(std::string(surface_form(key)), static_cast<Id>(by_name.size()));
      relation_class_.push_back(it->second);
    }
    for (const auto& part : ds.kgs)
      for (const auto* set : {&part.split.valid, &part.split.test})
        for (const auto& t : *set) held_out_.insert(key(t));
  }

  bool held_out(const Triple& t) const { return held_out_.contains(key(t)); }

 private:
  Triple key(const Triple& t) const { return {t.head, relation_class_.at(t.relation), t.tail}; }

  std::vector<Id> relation_class_;
  TripleSet held_out_;
};

}  // namespace detail

// Removes every training triple of any KG that matches a valid or test triple
// of any KG under shared entity ids (relations compared by surface name).
// Returns the number removed.
inline std::size_t remove_overlap_triples(MultiSourceDataset& ds) {
  if (ds.id_mode != IdMode::kShared) throw DataError("overlap removal requires shared-id mode");
  const detail::OverlapKeys keys(ds);
  std::size_t removed = 0;
  for (auto& part : ds.kgs) {
    removed += std::erase_if(part.split.train, [&](const Triple& t) { return keys.held_out(t); });
  }
  ds.removed_overlap += removed;
  return removed;
}

// True when no KG's train split matches any KG's valid ∪ test split.
inline bool overlap_free(const MultiSourceDataset& ds) {
  const detail::OverlapKeys keys(ds);
  for (const auto& part : ds.kgs)
    for (const auto& t : part.split.train)
      if (keys.held_out(t)) return false;
  return true;
}

// Deterministic shuffle-and-cut of one triple list into train/valid/test.
inline RawSplit split_raw_triples(std::vector<RawTriple> triples, double valid_fraction,
                                  double test_fraction, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x5b1c);
  std::shuffle(triples.begin(), triples.end(), rng);
  const auto n = triples.size();
  const auto n_valid = static_cast<std::size_t>(valid_fraction * static_cast<double>(n));
  const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(n));
  RawSplit out;
  out.valid.assign(triples.begin(), triples.begin() + static_cast<std::ptrdiff_t>(n_valid));
  out.test.assign(triples.begin() + static_cast<std::ptrdiff_t>(n_valid),
                  triples.begin() + static_cast<std::ptrdiff_t>(n_valid + n_test));
  out.train.assign(triples.begin() + static_cast<std::ptrdiff_t>(n_valid + n_test), triples.end());
  return out;
}

// Applies validate_split to every KG and records the drop counts.
inline void validate_dataset_splits(MultiSourceDataset& ds) {
  for (auto& part : ds.kgs) {
    const auto r = validate_split(part.split);
    ds.split_report.dropped_valid += r.dropped_valid;
    ds.split_report.dropped_test += r.dropped_test;
  }
}

// ---------------------------------------------------------------------------
// Dataset directories

namespace fs = std::filesystem;

inline fs::path find_file(const fs::path& dir, std::initializer_list<std::string_view> names) {
  for (auto name : names) {
    const auto p = dir / name;
    if (fs::is_regular_file(p)) return p;
  }
  return {};
}

// Single-KG link prediction layout: train.txt, valid.txt, test.txt.
inline MultiSourceDataset load_lp_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  RawSplit raw;
  const auto train = find_file(dir, {"train.txt", "train.tsv", "train.ttl"});
  if (train.empty()) throw DataError("no train.txt in " + dir.string());
  raw.train = load_triples_auto(train);
  if (auto p = find_file(dir, {"valid.txt", "valid.tsv", "valid.ttl"}); !p.empty())
    raw.valid = load_triples_auto(p);
  if (auto p = find_file(dir, {"test.txt", "test.tsv", "test.ttl"}); !p.empty())
    raw.test = load_triples_auto(p);
  auto ds = build_unique_ids(std::span<const RawSplit>(&raw, 1));
  validate_dataset_splits(ds);
  return ds;
}

// Adds type assertions to a single-KG dataset. Types get their own entity ids
// (disjoint from instance ids) and the reserved relation rdf:type.
inline void attach_types(MultiSourceDataset& ds, const std::vector<RawTriple>& train,
                         const std::vector<RawTriple>& valid, const std::vector<RawTriple>& test) {
  TypeAssertions types;
  types.type_relation = ds.relations.encode(std::string(kTypeNamespace) + ":" + std::string(kTypeRelation));
  std::vector<Id> type_ids;
  for (const auto* raw : {&train, &valid, &test})
    for (const auto& t : *raw) type_ids.push_back(ds.entities.encode(type_key(t.tail)));
  types.type_ids = detail::sorted_unique(std::move(type_ids));

  std::unordered_set<Id> trained_instances;
  for (const auto& part : ds.kgs)
    for (const auto& t : part.split.train) {
      trained_instances.insert(t.head);
      trained_instances.insert(t.tail);
    }
  const auto encode = [&](const std::vector<RawTriple>& raw, std::vector<TypeAssertion>& out,
                          bool require_known, std::size_t& dropped) {
    std::unordered_set<std::uint64_t> seen;
    for (const auto& t : raw) {
      auto inst = ds.entity(0, t.head);
      if (!inst || (require_known && !trained_instances.contains(*inst))) {
        if (require_known) {
          ++dropped;
          continue;
        }
        inst = ds.entities.encode(namespaced(0, t.head));
      }
      const Id type = ds.entities.at(type_key(t.tail));
      if (seen.insert((std::uint64_t{*inst} << 32) | type).second) out.push_back({*inst, type});
    }
  };
  std::size_t ignored = 0;
  encode(train, types.train, false, ignored);
  for (const auto& a : types.train) trained_instances.insert(a.instance);
  std::unordered_set<Id> trained_types;
  for (const auto& a : types.train) trained_types.insert(a.type);
  encode(valid, types.valid, true, ds.split_report.dropped_valid);
  encode(test, types.test, true, ds.split_report.dropped_test);
  const auto untrained_type = [&](const TypeAssertion& a) { return !trained_types.contains(a.type); };
  ds.split_report.dropped_valid += std::erase_if(types.valid, untrained_type);
  ds.split_report.dropped_test += std::erase_if(types.test, untrained_type);

  std::unordered_set<std::uint64_t> train_keys;
  for (const auto& a : types.train) train_keys.insert((std::uint64_t{a.instance} << 32) | a.type);
  for (const auto* set : {&types.valid, &types.test})
    for (const auto& a : *set)
      if (train_keys.contains((std::uint64_t{a.instance} << 32) | a.type))
        throw DataError("type assertion occurs in train and a held-out split");
  ds.types = std::move(types);
}

// Entity-typing layout: link-prediction files plus type_train.txt,
// type_valid.txt, type_test.txt.
inline MultiSourceDataset load_typing_dataset(const fs::path& dir) {
  auto ds = load_lp_dataset(dir);
  const auto train = find_file(dir, {"type_train.txt", "type_train.tsv"});
  if (train.empty()) throw DataError("no type_train.txt in " + dir.string());
  std::vector<RawTriple> valid;
  std::vector<RawTriple> test;
  if (auto p = find_file(dir, {"type_valid.txt", "type_valid.tsv"}); !p.empty())
    valid = load_type_assertions(p);
  if (auto p = find_file(dir, {"type_test.txt", "type_test.tsv"}); !p.empty())
    test = load_type_assertions(p);
  attach_types(ds, load_type_assertions(train), valid, test);
  return ds;
}

// Locates a split folder holding train_links (e.g. `721_5fold/1`).
inline fs::path find_link_split(const fs::path& dir, const std::string& requested) {
  if (!requested.empty()) {
    const auto p = dir / requested;
    if (!fs::is_regular_file(p / "train_links")) {
      throw DataError("split folder has no train_links: " + p.string());
    }
    return p;
  }
  std::vector<fs::path> candidates;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "train_links")
      candidates.push_back(entry.path().parent_path());
  }
  if (candidates.empty()) return {};
  std::sort(candidates.begin(), candidates.end());
  return candidates.front();
}

struct TwoKgOptions {
  IdMode id_mode = IdMode::kUnique;
  std::string split_folder;  // empty = auto-detect
  // Used when there is no split folder: OpenEA-style 20% / 10% / 70%.
  double link_train_fraction = 0.2;
  double link_valid_fraction = 0.1;
  // Per-KG triple splits for multi-source link prediction.
  bool split_triples = false;
  double triple_valid_fraction = 0.05;
  double triple_test_fraction = 0.05;
  std::uint64_t seed = 0;
};

// Two-KG layout: rel_triples_1, rel_triples_2, ent_links, optional
// attr_triples_{1,2}, optional split folder with train/valid/test_links, and
// optional lp_1/ and lp_2/ folders with per-KG train/valid/test triple files.
inline MultiSourceDataset load_two_kg_dataset(const fs::path& dir, const TwoKgOptions& opt) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  std::vector<RawSplit> raw(2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto lp_dir = dir / ("lp_" + std::to_string(k + 1));
    if (opt.split_triples && fs::is_regular_file(lp_dir / "train.txt")) {
      raw[k].train = load_triples(lp_dir / "train.txt");
      if (fs::is_regular_file(lp_dir / "valid.txt")) raw[k].valid = load_triples(lp_dir / "valid.txt");
      if (fs::is_regular_file(lp_dir / "test.txt")) raw[k].test = load_triples(lp_dir / "test.txt");
      continue;
    }
    const auto path = dir / ("rel_triples_" + std::to_string(k + 1));
    if (!fs::is_regular_file(path)) throw DataError("missing " + path.string());
    auto triples = load_triples(path);
    if (opt.split_triples) {
      raw[k] = split_raw_triples(std::move(triples), opt.triple_valid_fraction,
                                 opt.triple_test_fraction, derive_seed(opt.seed, k));
    } else {
      raw[k].train = std::move(triples);
    }
  }

  std::vector<RawAlignmentPair> pairs;
  const auto add_links = [&](const fs::path& p, Split split) {
    for (auto& [a, b] : load_pairs(p)) pairs.push_back({0, std::move(a), 1, std::move(b), split});
  };
  const auto split_dir = find_link_split(dir, opt.split_folder);
  if (!split_dir.empty()) {
    add_links(split_dir / "train_links", Split::kTrain);
    if (fs::is_regular_file(split_dir / "valid_links")) add_links(split_dir / "valid_links", Split::kValid);
    if (fs::is_regular_file(split_dir / "test_links")) add_links(split_dir / "test_links", Split::kTest);
  } else {
    const auto links = dir / "ent_links";
    if (!fs::is_regular_file(links)) throw DataError("missing " + links.string());
    auto all = load_pairs(links);
    Rng rng = make_rng(opt.seed, 0x11a5);
    std::shuffle(all.begin(), all.end(), rng);
    const auto n = all.size();
    const auto n_train = static_cast<std::size_t>(opt.link_train_fraction * static_cast<double>(n));
    const auto n_valid = static_cast<std::size_t>(opt.link_valid_fraction * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Split s = i < n_train ? Split::kTrain : i < n_train + n_valid ? Split::kValid : Split::kTest;
      pairs.push_back({0, std::move(all[i].first), 1, std::move(all[i].second), s});
    }
  }

  // Links whose entities never occur in a relation triple cannot be embedded.
  {
    auto probe = build_unique_ids(std::span<const RawSplit>(raw));
    std::erase_if(pairs, [&](const RawAlignmentPair& p) {
      return !probe.entity(p.left_kg, p.left) || !probe.entity(p.right_kg, p.right);
    });
  }

  MultiSourceDataset ds;
  if (opt.id_mode == IdMode::kShared) {
    ds = build_shared_ids(raw, pairs);
    // Merging can make held-out triples coincide with training triples.
    remove_overlap_triples(ds);
  } else {
    ds = build_unique_ids(std::span<const RawSplit>(raw));
    ds.alignment = resolve_alignment(ds, pairs);
  }
  validate_dataset_splits(ds);

  ds.attribute_triples.resize(2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto p = dir / ("attr_triples_" + std::to_string(k + 1));
    if (fs::is_regular_file(p)) ds.attribute_triples[k] = load_triples(p);
  }
  return ds;
}

}  // namespace mukg
