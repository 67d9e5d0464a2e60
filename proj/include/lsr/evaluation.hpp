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
#include <map>
#include <string>
#include <vector>

#include "lsr/index.hpp"

namespace lsr {

// query id -> (doc name -> graded relevance)
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> docs;  // rank order, scores non-increasing
};

// Queries in the order they were produced or read.
using Run = std::vector<RankedList>;

struct MetricResult {
  double value = 0.0;
  // Queries that contributed to the mean.
  std::size_t evaluated = 0;
  // Run queries with no judgments at all (warning count).
  std::size_t skipped_unjudged = 0;
  // Judged queries without a relevant doc that were left out (Recall only).
  std::size_t skipped_no_relevant = 0;
};

// Mean reciprocal rank of the first doc with relevance >= 1 within the top k.
MetricResult MrrAtK(const Run& run, const Qrels& qrels, std::size_t k = 10);
// Exponential gain 2^rel - 1, discount 1/log2(rank + 1); ideal DCG over all
// judged docs. Judged queries without relevant docs score 0.
MetricResult NdcgAtK(const Run& run, const Qrels& qrels, std::size_t k = 10);
// |relevant ∩ top k| / |relevant|; queries without relevant docs are skipped.
MetricResult RecallAtK(const Run& run, const Qrels& qrels, std::size_t k = 1000);

// `qid 0 docname rel`, whitespace separated.
Qrels ReadQrels(const std::filesystem::path& path);
void WriteQrels(const std::filesystem::path& path, const Qrels& qrels);
// `qid Q0 docname rank score tag`; ranks 1..n, scores with 6 decimals.
void WriteRun(const std::filesystem::path& path, const Run& run, const std::string& tag);
std::string FormatRun(const Run& run, const std::string& tag);
Run ReadRun(const std::filesystem::path& path);

}  // namespace lsr
