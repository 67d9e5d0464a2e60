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
#include <vector>

#include "lsr/evaluation.hpp"
#include "lsr/text.hpp"

namespace lsr {

// Toy retrieval task with known structure. Every document carries two unique
// key words, a handful of words from its topic and common filler words;
// queries mix one key word, one topic word and filler. The teacher score
// weights key matches over topic matches and ignores filler, so a student
// must learn term importance to rank well.
struct SyntheticTaskConfig {
  std::size_t num_docs = 200;
  std::size_t num_topics = 20;
  std::size_t words_per_topic = 8;
  std::size_t num_filler = 30;
  std::size_t doc_topic_words = 4;
  std::size_t doc_filler_words = 6;
  std::size_t query_filler_words = 3;
  std::size_t train_queries_per_doc = 4;
  std::size_t dev_queries = 100;
  double teacher_noise = 0.1;
  std::uint64_t seed = 7;
};

struct SyntheticTask {
  Corpus corpus;
  std::vector<RawTriplet> triplets;
  std::vector<TextRecord> dev_queries;
  Qrels dev_qrels;
};

SyntheticTask MakeSyntheticTask(const SyntheticTaskConfig& config);

}  // namespace lsr
