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
#include <span>
#include <vector>

#include "lsr/evaluation.hpp"
#include "lsr/index.hpp"
#include "lsr/model.hpp"
#include "lsr/sparse_vector.hpp"
#include "lsr/text.hpp"

namespace lsr {

// Encodes records in order. A record that tokenizes to nothing raises an
// empty-input error naming it.
std::vector<NamedVector> EncodeRecords(SparseEncoder& model, const Vocabulary& vocab,
                                       std::span<const TextRecord> records);
// Documents in name order.
std::vector<NamedVector> EncodeCorpus(SparseEncoder& model, const Vocabulary& vocab,
                                      const Corpus& corpus);

Run Retrieve(const InvertedIndex& index, std::span<const NamedVector> queries, std::size_t k);

struct RetrievalMetrics {
  double mrr_at_10 = 0.0;
  double ndcg_at_10 = 0.0;
  double recall_at_1000 = 0.0;
  double flops = 0.0;
  double query_density = 0.0;
  double doc_density = 0.0;
};

// Encode corpus and queries, index, retrieve the top 1000 and score the run.
RetrievalMetrics EvaluateRetrieval(SparseEncoder& model, const Vocabulary& vocab,
                                   const Corpus& corpus, std::span<const TextRecord> queries,
                                   const Qrels& qrels);

}  // namespace lsr
