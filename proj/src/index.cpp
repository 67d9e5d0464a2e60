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

#include "lsr/index.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <unordered_set>

#include "binary_io.hpp"
#include "lsr/error.hpp"

namespace lsr {
namespace {

constexpr char kIndexMagic[4] = {'L', 'S', 'R', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

struct Candidate {
  double score;
  DocId doc;
};

// True if a ranks strictly ahead of b.
bool Better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc < b.doc;
}

// Keeps the k best candidates; the worst sits on top of the heap.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}

  void Offer(Candidate c) {
    if (k_ == 0) return;
    if (heap_.size() < k_) {
      heap_.push(c);
    } else if (Better(c, heap_.top())) {
      heap_.pop();
      heap_.push(c);
    }
  }

  std::vector<Candidate> Sorted() {
    std::vector<Candidate> out;
    out.reserve(heap_.size());
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct WorstOnTop {
    bool operator()(const Candidate& a, const Candidate& b) const { return Better(a, b); }
  };
  std::size_t k_;
  std::priority_queue<Candidate, std::vector<Candidate>, WorstOnTop> heap_;
};

SearchResult Name(const std::vector<Candidate>& ranked,
                  const std::function<const std::string&(DocId)>& name_of) {
  SearchResult out;
  out.reserve(ranked.size());
  for (const auto& c : ranked) out.push_back({name_of(c.doc), c.score});
  return out;
}

}  // namespace

std::span<const Posting> InvertedIndex::postings(TermId term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return {};
  return it->second;
}

InvertedIndex BuildIndex(std::span<const NamedVector> docs, ImpactQuantization quantization) {
  InvertedIndex index;
  std::unordered_set<std::string> seen;
  double max_weight = 0.0;
  for (const auto& d : docs) {
    for (const auto& e : d.vector.entries()) max_weight = std::max(max_weight, e.weight);
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Require(seen.insert(docs[i].id).second, ErrorKind::kInput,
            "duplicate document name '" + docs[i].id + "'");
    const auto doc = static_cast<DocId>(i);
    index.doc_names_.push_back(docs[i].id);
    for (const auto& e : docs[i].vector.entries()) {
      float impact = static_cast<float>(e.weight);
      if (quantization == ImpactQuantization::kLinear8) {
        // Level 0 is reserved for absent terms; positive weights keep a posting.
        const double level = std::max(1.0, std::round(e.weight / max_weight * 255.0));
        impact = static_cast<float>(level * max_weight / 255.0);
      }
      if (!(impact > 0.0f)) continue;
      index.postings_[e.term].push_back({doc, impact});
      ++index.posting_count_;
    }
  }
  return index;
}

SearchResult TopKSearch(const InvertedIndex& index, const SparseVector& query, std::size_t k) {
  if (k == 0) return {};
  struct Cursor {
    std::span<const Posting> list;
    std::size_t pos;
    double weight;
  };
  // Query terms ascending, matching the brute-force summation order.
  std::vector<Cursor> cursors;
  for (const auto& e : query.entries()) {
    auto list = index.postings(e.term);
    if (!list.empty()) cursors.push_back({list, 0, e.weight});
  }
  TopK top(k);
  while (true) {
    DocId current = UINT32_MAX;
    bool any = false;
    for (const auto& c : cursors) {
      if (c.pos < c.list.size()) {
        current = std::min(current, c.list[c.pos].doc);
        any = true;
      }
    }
    if (!any) break;
    double score = 0.0;
    for (auto& c : cursors) {
      if (c.pos < c.list.size() && c.list[c.pos].doc == current) {
        score += c.weight * static_cast<double>(c.list[c.pos].impact);
        ++c.pos;
      }
    }
    top.Offer({score, current});
  }
  return Name(top.Sorted(), [&](DocId d) -> const std::string& { return index.doc_name(d); });
}

SearchResult BruteForceSearch(std::span<const NamedVector> docs, const SparseVector& query,
                              std::size_t k) {
  std::vector<Candidate> scored;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    bool overlap = false;
    double score = 0.0;
    for (const auto& e : query.entries()) {
      const double w = docs[i].vector.Weight(e.term);
      const float impact = static_cast<float>(w);
      if (impact > 0.0f) {
        overlap = true;
        score += e.weight * static_cast<double>(impact);
      }
    }
    if (overlap) scored.push_back({score, static_cast<DocId>(i)});
  }
  std::sort(scored.begin(), scored.end(), Better);
  if (scored.size() > k) scored.resize(k);
  return Name(scored, [&](DocId d) -> const std::string& { return docs[d].id; });
}

double FlopsMetric(std::span<const SparseVector> queries, const InvertedIndex& index) {
  Require(!queries.empty(), ErrorKind::kContract, "FLOPs metric needs at least one query");
  Require(index.doc_count() > 0, ErrorKind::kContract, "FLOPs metric needs a non-empty index");
  double total = 0.0;
  for (const auto& q : queries) {
    for (const auto& e : q.entries()) total += static_cast<double>(index.postings(e.term).size());
  }
  return total / (static_cast<double>(queries.size()) * static_cast<double>(index.doc_count()));
}

// Layout (little-endian):
//   magic "LSRX" | version u32 | doc_count u64 | term_count u64
//   term_count x { term u32 | offset u64 | length u64 }   offsets relative to
//                                                          the postings section
//   postings: per term, `length` varint doc-id gaps then `length` f32 impacts
//   doc_count x { varint name length | name bytes }
void InvertedIndex::Save(const std::filesystem::path& path) const {
  std::string postings;
  std::string dictionary;
  for (const auto& [term, list] : postings_) {
    io::Put<std::uint32_t>(dictionary, term);
    io::Put<std::uint64_t>(dictionary, postings.size());
    io::Put<std::uint64_t>(dictionary, list.size());
    DocId previous = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      io::PutVarint(postings, i == 0 ? list[i].doc : list[i].doc - previous);
      previous = list[i].doc;
    }
    for (const auto& p : list) io::Put<float>(postings, p.impact);
  }
  std::string out(kIndexMagic, sizeof(kIndexMagic));
  io::Put<std::uint32_t>(out, kIndexVersion);
  io::Put<std::uint64_t>(out, doc_names_.size());
  io::Put<std::uint64_t>(out, postings_.size());
  out += dictionary;
  out += postings;
  for (const auto& name : doc_names_) {
    io::PutVarint(out, name.size());
    out += name;
  }
  io::WriteFile(path, out);
}

InvertedIndex InvertedIndex::Load(const std::filesystem::path& path) {
  io::Reader r(io::ReadFile(path), path.string());
  if (r.GetBytes(4, "magic") != std::string(kIndexMagic, 4)) r.Corrupt("bad index magic");
  const auto version = r.Get<std::uint32_t>("version");
  if (version != kIndexVersion) r.Corrupt("unsupported index version " + std::to_string(version));
  const auto doc_count = r.Get<std::uint64_t>("doc count");
  const auto term_count = r.Get<std::uint64_t>("term count");
  struct Entry {
    TermId term;
    std::uint64_t offset, length;
  };
  std::vector<Entry> dictionary;
  for (std::uint64_t i = 0; i < term_count; ++i) {
    Entry e{r.Get<std::uint32_t>("term id"), r.Get<std::uint64_t>("posting offset"),
            r.Get<std::uint64_t>("posting length")};
    if (!dictionary.empty() && e.term <= dictionary.back().term) {
      r.Corrupt("term dictionary not strictly ascending");
    }
    dictionary.push_back(e);
  }
  // Lists are contiguous in dictionary order; the doc table follows the last.
  const std::size_t postings_start = r.pos();
  InvertedIndex index;
  for (const auto& e : dictionary) {
    if (e.length == 0) r.Corrupt("empty posting list for term " + std::to_string(e.term));
    if (postings_start + e.offset != r.pos()) {
      r.Corrupt("posting offset " + std::to_string(e.offset) + " for term " +
                std::to_string(e.term) + " does not follow the previous list");
    }
    std::vector<Posting> list(e.length);
    std::uint64_t doc = 0;
    for (std::uint64_t i = 0; i < e.length; ++i) {
      const std::uint64_t gap = r.GetVarint("doc gap");
      if (i > 0 && gap == 0) r.Corrupt("posting list not strictly ascending");
      doc = i == 0 ? gap : doc + gap;
      if (doc >= doc_count) r.Corrupt("doc id " + std::to_string(doc) + " out of range");
      list[i].doc = static_cast<DocId>(doc);
    }
    for (auto& p : list) {
      p.impact = r.Get<float>("impact");
      if (!(p.impact > 0.0f) || !std::isfinite(p.impact)) r.Corrupt("non-positive impact");
    }
    index.posting_count_ += list.size();
    index.postings_.emplace(e.term, std::move(list));
  }
  for (std::uint64_t i = 0; i < doc_count; ++i) {
    const auto len = r.GetVarint("doc name length");
    index.doc_names_.push_back(r.GetBytes(len, "doc name"));
  }
  if (!r.done()) r.Corrupt("trailing bytes after doc table");
  return index;
}

}  // namespace lsr
