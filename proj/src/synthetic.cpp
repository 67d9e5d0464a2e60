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

#include "lsr/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>

#include "lsr/random.hpp"

namespace lsr {
namespace {

const std::vector<std::string>& FillerPool() {
  static const std::vector<std::string> kWords = {
      "the",  "of",    "and",  "to",    "in",    "is",   "for",  "on",   "with", "as",
      "by",   "at",    "from", "that",  "this",  "it",   "an",   "be",   "are",  "was",
      "or",   "which", "can",  "has",   "have",  "its",  "not",  "but",  "also", "more",
      "most", "some",  "such", "other", "these", "than", "into", "when", "then", "been"};
  return kWords;
}

std::string Numbered(const char* prefix, std::size_t a, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, a);
  return buf;
}

std::string Join(std::vector<std::string> words, Rng& rng) {
  rng.Shuffle(std::span<std::string>(words));
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

template <typename T>
const T& Pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.Below(items.size())];
}

struct Doc {
  std::string name;
  std::size_t topic;
  std::vector<std::string> keys;
  std::vector<std::string> topic_words;
  std::set<std::string> words;
};

}  // namespace

SyntheticTask MakeSyntheticTask(const SyntheticTaskConfig& c) {
  Rng rng(c.seed);
  std::vector<std::string> filler(FillerPool().begin(),
                                  FillerPool().begin() +
                                      static_cast<std::ptrdiff_t>(std::min(c.num_filler, FillerPool().size())));
  std::vector<std::vector<std::string>> topics(c.num_topics);
  for (std::size_t t = 0; t < c.num_topics; ++t) {
    for (std::size_t w = 0; w < c.words_per_topic; ++w) {
      topics[t].push_back(Numbered("topic", t, 2) + static_cast<char>('a' + w));
    }
  }

  SyntheticTask task;
  std::vector<Doc> docs;
  for (std::size_t d = 0; d < c.num_docs; ++d) {
    Doc doc;
    doc.name = Numbered("D", d, 4);
    doc.topic = d % c.num_topics;
    doc.keys = {Numbered("key", d, 4) + "x", Numbered("key", d, 4) + "y"};
    std::vector<std::string> words = doc.keys;
    for (std::size_t i = 0; i < c.doc_topic_words; ++i) {
      doc.topic_words.push_back(Pick(topics[doc.topic], rng));
      words.push_back(doc.topic_words.back());
    }
    for (std::size_t i = 0; i < c.doc_filler_words; ++i) words.push_back(Pick(filler, rng));
    doc.words.insert(words.begin(), words.end());
    task.corpus.Add(doc.name, Join(words, rng));
    docs.push_back(std::move(doc));
  }

  auto make_query = [&](const Doc& doc) {
    std::vector<std::string> words = {Pick(doc.keys, rng), Pick(topics[doc.topic], rng)};
    for (std::size_t i = 0; i < c.query_filler_words; ++i) words.push_back(Pick(filler, rng));
    return words;
  };
  auto teacher = [&](const std::vector<std::string>& query, const Doc& doc) {
    double score = 0.0;
    for (const auto& w : query) {
      if (!doc.words.contains(w)) continue;
      if (w.rfind("key", 0) == 0) {
        score += 4.0;
      } else if (w.rfind("topic", 0) == 0) {
        score += 1.0;
      }
    }
    return score + rng.Normal(0.0, c.teacher_noise);
  };

  for (std::size_t d = 0; d < c.num_docs; ++d) {
    for (std::size_t r = 0; r < c.train_queries_per_doc; ++r) {
      const auto query = make_query(docs[d]);
      // Alternate same-topic (hard) and random negatives.
      // Falls back to random negatives when the topic has a single document.
      const std::size_t same_topic = (c.num_docs + c.num_topics - 1 - docs[d].topic) / c.num_topics;
      std::size_t neg = d;
      while (neg == d) {
        if (r % 2 == 0 && same_topic > 1) {
          neg = docs[d].topic + c.num_topics * rng.Below(same_topic);
        } else {
          neg = rng.Below(c.num_docs);
        }
        if (c.num_docs <= 1) break;
      }
      RawTriplet t;
      t.query = Join(query, rng);
      t.positive = task.corpus.Text(docs[d].name);
      t.negative = task.corpus.Text(docs[neg].name);
      t.teacher_pos = teacher(query, docs[d]);
      t.teacher_neg = teacher(query, docs[neg]);
      task.triplets.push_back(std::move(t));
    }
  }
  rng.Shuffle(std::span<RawTriplet>(task.triplets));

  for (std::size_t q = 0; q < c.dev_queries; ++q) {
    const Doc& doc = docs[rng.Below(c.num_docs)];
    const std::string qid = Numbered("Q", q, 4);
    task.dev_queries.push_back({qid, Join(make_query(doc), rng)});
    task.dev_qrels[qid][doc.name] = 1;
  }
  return task;
}

}  // namespace lsr
