// Copyright 2026 The LSR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lsr/sparse_vector.hpp"

namespace lsr {

using DocId = std::uint32_t;

struct Posting {
  DocId doc = 0;
  float impact = 0.0f;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct ScoredDoc {
  std::string name;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

// Ranked by score descending, ties by ascending internal doc id.
using SearchResult = std::vector<ScoredDoc>;

enum class ImpactQuantization {
  kNone,
  // Impacts snapped to 255 levels of the corpus maximum; excluded from the
  // exactness guarantees against brute force.
  kLinear8,
};

// Term id -> posting list of (doc id, impact), doc ids strictly ascending.
// Immutable once built; concurrent searches are safe.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  std::size_t doc_count() const { return doc_names_.size(); }
  std::size_t term_count() const { return postings_.size(); }
  std::size_t posting_count() const { return posting_count_; }
  const std::string& doc_name(DocId id) const { return doc_names_.at(id); }
  const std::vector<std::string>& doc_names() const { return doc_names_; }
  // Empty span for terms with no postings.
  std::span<const Posting> postings(TermId term) const;
  const std::map<TermId, std::vector<Posting>>& all_postings() const { return postings_; }

  void Save(const std::filesystem::path& path) const;
  static InvertedIndex Load(const std::filesystem::path& path);

  friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;

 private:
  friend InvertedIndex BuildIndex(std::span<const NamedVector>, ImpactQuantization);

  std::map<TermId, std::vector<Posting>> postings_;
  std::vector<std::string> doc_names_;
  std::size_t posting_count_ = 0;
};

// Documents get ids in input order. Raises an input error on a repeated name.
InvertedIndex BuildIndex(std::span<const NamedVector> docs,
                         ImpactQuantization quantization = ImpactQuantization::kNone);

// Exact document-at-a-time top-k by dot product, bounded min-heap, no
// pruning. Only documents sharing a term with the query are candidates.
SearchResult TopKSearch(const InvertedIndex& index, const SparseVector& query, std::size_t k);

// Scores every document directly (impacts rounded to float as the index
// stores them) and sorts by (-score, doc position).
SearchResult BruteForceSearch(std::span<const NamedVector> docs, const SparseVector& query,
                              std::size_t k);

// Mean over (query, doc) pairs of the number of shared terms.
double FlopsMetric(std::span<const SparseVector> queries, const InvertedIndex& index);

}  // namespace lsr
