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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsr/tensor.hpp"

namespace lsr {

struct SparseEntry {
  TermId term = 0;
  double weight = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Term id -> positive weight, entries kept sorted by term id. Zero weights are
// never stored.
class SparseVector {
 public:
  SparseVector() = default;
  // Accepts entries in any order; drops zeros, rejects negative or non-finite
  // weights and repeated term ids.
  explicit SparseVector(std::vector<SparseEntry> entries);
  // Keeps the strictly positive coordinates of a dense row.
  static SparseVector FromDense(std::span<const double> dense);

  std::span<const SparseEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Weight of `term`, 0 when absent.
  double Weight(TermId term) const;
  bool Contains(TermId term) const { return Weight(term) > 0.0; }
  std::vector<TermId> Support() const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<SparseEntry> entries_;
};

// Σ over shared terms of a[t]·b[t], accumulated in ascending term order.
double SparseDot(const SparseVector& a, const SparseVector& b);

// Entrywise maximum.
SparseVector Max(const SparseVector& a, const SparseVector& b);

struct NamedVector {
  std::string id;
  SparseVector vector;
};

// `id<TAB>term:weight term:weight ...`; term is the numeric term id, weights
// printed with 6 decimals, terms ascending.
std::string FormatSparseLine(const std::string& id, const SparseVector& v);
NamedVector ParseSparseLine(std::string_view line, std::size_t line_no = 0);
void WriteSparseVectors(const std::filesystem::path& path, std::span<const NamedVector> vectors);
std::vector<NamedVector> ReadSparseVectors(const std::filesystem::path& path);

}  // namespace lsr
