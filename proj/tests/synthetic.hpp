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

// Synthetic on-disk datasets for pipeline and acceptance tests.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mukg/kgdata.hpp"
#include "mukg/random.hpp"

namespace mukg::synthetic {

namespace fs = std::filesystem;

inline std::string ent(std::size_t i) { return "e" + std::to_string(i); }
inline std::string rel(std::size_t r) { return "r" + std::to_string(r); }

inline void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
}

inline std::string line(const std::string& a, const std::string& b, const std::string& c) {
  return a + "\t" + b + "\t" + c;
}

// Random distinct triples where every entity appears at least once.
inline std::vector<Triple> random_graph(std::size_t n_e, std::size_t n_r, std::size_t n_triples, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x5e1f);
  TripleSet seen;
  std::vector<Triple> out;
  for (Id e = 0; e < n_e; ++e) {
    Triple t{e, static_cast<Id>(uniform_index(rng, n_r)), static_cast<Id>(uniform_index(rng, n_e))};
    if (t.tail == e) t.tail = static_cast<Id>((e + 1) % n_e);
    if (seen.insert(t).second) out.push_back(t);
  }
  while (out.size() < n_triples) {
    Triple t{static_cast<Id>(uniform_index(rng, n_e)), static_cast<Id>(uniform_index(rng, n_r)),
             static_cast<Id>(uniform_index(rng, n_e))};
    if (t.head != t.tail && seen.insert(t).second) out.push_back(t);
  }
  return out;
}

// Single-KG link prediction: tail = (head + offset_r) mod n, a translation
// pattern. Every head gets every relation; a tenth of the triples are held
// out for valid and test each, keeping all entities in train.
inline void write_lp_dataset(const fs::path& dir, std::size_t n_e = 40, std::size_t n_r = 3, std::uint64_t seed = 1) {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
  Rng rng = make_rng(seed, 0x1b);
  for (std::size_t h = 0; h < n_e; ++h)
    for (std::size_t r = 0; r < n_r; ++r) {
      const std::string l = line(ent(h), rel(r), ent((h + 3 * r + 1) % n_e));
      const auto u = uniform_index(rng, 10);
      (u == 0 ? valid : u == 1 ? test : train).push_back(l);
    }
  write_lines(dir / "train.txt", train);
  write_lines(dir / "valid.txt", valid);
  write_lines(dir / "test.txt", test);
}

// Typing: the LP dataset plus instance i having type t(i mod n_types).
inline void write_typing_dataset(const fs::path& dir, std::size_t n_e = 40, std::size_t n_types = 4,
                                 std::uint64_t seed = 2) {
  write_lp_dataset(dir, n_e, 3, seed);
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
  for (std::size_t i = 0; i < n_e; ++i) {
    const std::string l = line(ent(i), std::string(kTypeRelation), "t" + std::to_string(i % n_types));
    (i % 10 == 3 ? valid : i % 10 == 7 ? test : train).push_back(l);
  }
  write_lines(dir / "type_train.txt", train);
  write_lines(dir / "type_valid.txt", valid);
  write_lines(dir / "type_test.txt", test);
}

// Two KGs where KG2 is a relabelled copy of KG1 (entity eN ↦ xN, relation
// rN ↦ sN unless `relabel_relations` is off) and ent_links pairs every
// entity with its copy. With
// `split_folder`, links are split train/valid/test by `train_fraction` with
// a tenth for valid; otherwise the loader's fallback split applies.
inline void write_duplicated_two_kg(const fs::path& dir, std::size_t n_e, std::size_t n_r, std::size_t n_triples,
                                    std::uint64_t seed, double train_fraction = 0.3, bool split_folder = true,
                                    bool relabel_relations = true) {
  const auto g = random_graph(n_e, n_r, n_triples, seed);
  std::vector<std::string> kg1;
  std::vector<std::string> kg2;
  for (const auto& t : g) {
    kg1.push_back(line(ent(t.head), rel(t.relation), ent(t.tail)));
    kg2.push_back(line("x" + std::to_string(t.head), (relabel_relations ? "s" : "r") + std::to_string(t.relation), "x" + std::to_string(t.tail)));
  }
  write_lines(dir / "rel_triples_1", kg1);
  write_lines(dir / "rel_triples_2", kg2);
  std::vector<std::size_t> order(n_e);
  for (std::size_t i = 0; i < n_e; ++i) order[i] = i;
  Rng rng = make_rng(seed, 0x11);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::string> all;
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
  const auto n_train = static_cast<std::size_t>(train_fraction * double(n_e));
  const auto n_valid = n_e / 10;
  for (std::size_t k = 0; k < n_e; ++k) {
    const std::size_t i = order[k];
    const std::string l = ent(i) + "\tx" + std::to_string(i);
    all.push_back(l);
    (k < n_train ? train : k < n_train + n_valid ? valid : test).push_back(l);
  }
  write_lines(dir / "ent_links", all);
  if (split_folder) {
    write_lines(dir / "split" / "1" / "train_links", train);
    write_lines(dir / "split" / "1" / "valid_links", valid);
    write_lines(dir / "split" / "1" / "test_links", test);
  }
}

}  // namespace mukg::synthetic
