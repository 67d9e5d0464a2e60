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

#include "lsr/sparse_vector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lsr/error.hpp"

namespace lsr {

SparseVector::SparseVector(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.term < b.term; });
  entries_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    Require(std::isfinite(e.weight) && e.weight >= 0.0, ErrorKind::kInput,
            "sparse weight for term " + std::to_string(e.term) + " must be finite and >= 0");
    Require(i == 0 || entries[i - 1].term != e.term, ErrorKind::kInput,
            "term " + std::to_string(e.term) + " repeated in sparse vector");
    if (e.weight > 0.0) entries_.push_back(e);
  }
}

SparseVector SparseVector::FromDense(std::span<const double> dense) {
  SparseVector v;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    Require(std::isfinite(dense[i]), ErrorKind::kNumeric, "non-finite dense activation");
    if (dense[i] > 0.0) v.entries_.push_back({static_cast<TermId>(i), dense[i]});
  }
  return v;
}

double SparseVector::Weight(TermId term) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), term,
                             [](const SparseEntry& e, TermId t) { return e.term < t; });
  return it != entries_.end() && it->term == term ? it->weight : 0.0;
}

std::vector<TermId> SparseVector::Support() const {
  std::vector<TermId> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.term);
  return out;
}

double SparseDot(const SparseVector& a, const SparseVector& b) {
  const auto x = a.entries();
  const auto y = b.entries();
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i].term < y[j].term) {
      ++i;
    } else if (y[j].term < x[i].term) {
      ++j;
    } else {
      total += x[i].weight * y[j].weight;
      ++i;
      ++j;
    }
  }
  return total;
}

SparseVector Max(const SparseVector& a, const SparseVector& b) {
  std::vector<SparseEntry> out;
  const auto x = a.entries();
  const auto y = b.entries();
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    if (j == y.size() || (i < x.size() && x[i].term < y[j].term)) {
      out.push_back(x[i++]);
    } else if (i == x.size() || y[j].term < x[i].term) {
      out.push_back(y[j++]);
    } else {
      out.push_back({x[i].term, std::max(x[i].weight, y[j].weight)});
      ++i;
      ++j;
    }
  }
  return SparseVector(std::move(out));
}

std::string FormatSparseLine(const std::string& id, const SparseVector& v) {
  std::string line = id;
  line += '\t';
  char buf[64];
  bool first = true;
  for (const auto& e : v.entries()) {
    const int len = std::snprintf(buf, sizeof(buf), "%u:%.6f", e.term, e.weight);
    if (!first) line += ' ';
    line.append(buf, static_cast<std::size_t>(len));
    first = false;
  }
  return line;
}

NamedVector ParseSparseLine(std::string_view line, std::size_t line_no) {
  const auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
  const std::size_t tab = line.find('\t');
  Require(tab != std::string_view::npos && tab > 0, ErrorKind::kFormat,
          where() + "expected 'id<TAB>term:weight ...'");
  NamedVector out{std::string(line.substr(0, tab)), {}};
  std::vector<SparseEntry> entries;
  std::string_view rest = line.substr(tab + 1);
  while (!rest.empty()) {
    const std::size_t space = rest.find(' ');
    const std::string_view item = rest.substr(0, space);
    rest = space == std::string_view::npos ? std::string_view{} : rest.substr(space + 1);
    if (item.empty()) continue;
    const std::size_t colon = item.find(':');
    Require(colon != std::string_view::npos, ErrorKind::kFormat,
            where() + "entry '" + std::string(item) + "' lacks ':'");
    SparseEntry e;
    const char* end = item.data() + item.size();
    auto r1 = std::from_chars(item.data(), item.data() + colon, e.term);
    auto r2 = std::from_chars(item.data() + colon + 1, end, e.weight);
    Require(r1.ec == std::errc() && r1.ptr == item.data() + colon && r2.ec == std::errc() &&
                r2.ptr == end,
            ErrorKind::kFormat, where() + "cannot parse entry '" + std::string(item) + "'");
    entries.push_back(e);
  }
  try {
    out.vector = SparseVector(std::move(entries));
  } catch (const Error& e) {
    Fail(ErrorKind::kFormat, where() + e.what());
  }
  return out;
}

void WriteSparseVectors(const std::filesystem::path& path, std::span<const NamedVector> vectors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorKind::kFormat, "cannot write " + path.string());
  for (const auto& v : vectors) out << FormatSparseLine(v.id, v.vector) << '\n';
}

std::vector<NamedVector> ReadSparseVectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kFormat, "cannot open " + path.string());
  std::vector<NamedVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      out.push_back(ParseSparseLine(line, line_no));
    } catch (const Error& e) {
      Fail(ErrorKind::kFormat, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lsr
