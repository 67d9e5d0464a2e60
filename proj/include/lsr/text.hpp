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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lsr/tensor.hpp"

namespace lsr {

inline constexpr TermId kPadId = 0;
inline constexpr TermId kStartId = 1;
inline constexpr TermId kUnknownId = 2;
inline constexpr std::size_t kReservedIds = 3;

class Vocabulary {
 public:
  // Vocabulary holding only the reserved ids.
  Vocabulary();
  // Tokens are assigned ids kReservedIds, kReservedIds + 1, ... in order.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TermId Lookup(std::string_view token) const;
  std::optional<TermId> Find(std::string_view token) const;
  const std::string& Token(TermId id) const;
  // Non-reserved tokens in id order.
  std::vector<std::string> tokens() const;
  // FNV-1a over the token list; stored in checkpoints to detect mismatches.
  std::uint64_t Digest() const;

  void Save(const std::filesystem::path& path) const;
  static Vocabulary Load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TermId> ids_;
};

// Lowercases, splits on whitespace (ASCII and Unicode space separators), and
// strips leading/trailing ASCII punctuation. Empty pieces are dropped.
std::vector<std::string> SplitWords(std::string_view text);

// Words of `text` mapped to ids, unknown words to kUnknownId, truncated to
// max_len tokens.
TokenIds Tokenize(const Vocabulary& vocab, std::string_view text, std::size_t max_len);

// doc name -> raw text, iterated in name order.
class Corpus {
 public:
  void Add(std::string name, std::string text);
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::map<std::string, std::string>& docs() const { return docs_; }
  const std::string& Text(const std::string& name) const;

 private:
  std::map<std::string, std::string> docs_;
};

// Tokens of frequency >= min_freq ordered by (-frequency, token).
Vocabulary BuildVocab(const std::vector<std::string>& texts, std::size_t min_freq);
Vocabulary BuildVocab(const Corpus& corpus, std::size_t min_freq);

struct TextRecord {
  std::string id;
  std::string text;
};

struct TrainingTriplet {
  TokenIds query_tokens;
  TokenIds pos_tokens;
  TokenIds neg_tokens;
  double teacher_pos = 0.0;
  double teacher_neg = 0.0;
};

struct RawTriplet {
  std::string query;
  std::string positive;
  std::string negative;
  double teacher_pos = 0.0;
  double teacher_neg = 0.0;
};

// `id<TAB>text` lines, order preserved. Malformed lines raise a format error
// naming the line.
std::vector<TextRecord> ReadRecords(const std::filesystem::path& path);
void WriteRecords(const std::filesystem::path& path, const std::vector<TextRecord>& records);
Corpus ReadCorpus(const std::filesystem::path& path);

std::vector<RawTriplet> ReadTriplets(const std::filesystem::path& path);
void WriteTriplets(const std::filesystem::path& path, const std::vector<RawTriplet>& triplets);
// Tokenizes every field; raises an empty-input error if any sequence is empty.
std::vector<TrainingTriplet> TokenizeTriplets(const Vocabulary& vocab,
                                              const std::vector<RawTriplet>& raw,
                                              std::size_t max_len);

// Splits a tab-separated line into fields.
std::vector<std::string_view> SplitTabs(std::string_view line);

}  // namespace lsr
