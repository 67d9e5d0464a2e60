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

#include "lsr/pipeline.hpp"

#include "lsr/error.hpp"

namespace lsr {
namespace {

double MeanSize(std::span<const NamedVector> vectors) {
  if (vectors.empty()) return 0.0;
  double total = 0.0;
  for (const auto& v : vectors) total += static_cast<double>(v.vector.size());
  return total / static_cast<double>(vectors.size());
}

}  // namespace

std::vector<NamedVector> EncodeRecords(SparseEncoder& model, const Vocabulary& vocab,
                                       std::span<const TextRecord> records) {
  std::vector<NamedVector> out;
  out.reserve(records.size());
  const std::size_t max_len = model.config().backbone.max_seq_len;
  for (const auto& r : records) {
    const TokenIds tokens = Tokenize(vocab, r.text, max_len);
    Require(!tokens.empty(), ErrorKind::kEmptyInput, "record '" + r.id + "' has no tokens");
    out.push_back({r.id, model.Encode(tokens)});
  }
  return out;
}

std::vector<NamedVector> EncodeCorpus(SparseEncoder& model, const Vocabulary& vocab,
                                      const Corpus& corpus) {
  std::vector<TextRecord> records;
  records.reserve(corpus.size());
  for (const auto& [name, text] : corpus.docs()) records.push_back({name, text});
  return EncodeRecords(model, vocab, records);
}

Run Retrieve(const InvertedIndex& index, std::span<const NamedVector> queries, std::size_t k) {
  Run run;
  run.reserve(queries.size());
  for (const auto& q : queries) run.push_back({q.id, TopKSearch(index, q.vector, k)});
  return run;
}

RetrievalMetrics EvaluateRetrieval(SparseEncoder& model, const Vocabulary& vocab,
                                   const Corpus& corpus, std::span<const TextRecord> queries,
                                   const Qrels& qrels) {
  const auto docs = EncodeCorpus(model, vocab, corpus);
  const auto encoded_queries = EncodeRecords(model, vocab, queries);
  const InvertedIndex index = BuildIndex(docs);
  const Run run = Retrieve(index, encoded_queries, 1000);
  RetrievalMetrics m;
  m.mrr_at_10 = MrrAtK(run, qrels, 10).value;
  m.ndcg_at_10 = NdcgAtK(run, qrels, 10).value;
  m.recall_at_1000 = RecallAtK(run, qrels, 1000).value;
  std::vector<SparseVector> qvecs;
  for (const auto& q : encoded_queries) qvecs.push_back(q.vector);
  m.flops = FlopsMetric(qvecs, index);
  m.query_density = MeanSize(encoded_queries);
  m.doc_density = MeanSize(docs);
  return m;
}

}  // namespace lsr
