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

#include "lsr/text.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lsr/error.hpp"

namespace lsr {
namespace {

const std::vector<std::string>& ReservedTokens() {
  static const std::vector<std::string> kTokens = {"<pad>", "<s>", "<unk>"};
  return kTokens;
}

// Decodes one UTF-8 code point starting at text[i]; advances i. Invalid bytes
// decode as themselves.
char32_t DecodeUtf8(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  auto continuation = [&](std::size_t k) -> int {
    if (i + k >= text.size()) return -1;
    const auto b = static_cast<unsigned char>(text[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = continuation(1);
    if (c1 >= 0) {
      i += 2;
      return static_cast<char32_t>(((b0 & 0x1F) << 6) | c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = continuation(1), c2 = continuation(2);
    if (c1 >= 0 && c2 >= 0) {
      i += 3;
      return static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = continuation(1), c2 = continuation(2), c3 = continuation(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      i += 4;
      return static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3);
    }
  }
  ++i;
  return b0;
}

bool IsUnicodeSpace(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool IsAsciiPunct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::string Normalize(std::string_view word) {
  std::size_t begin = 0, end = word.size();
  while (begin < end && IsAsciiPunct(word[begin])) ++begin;
  while (end > begin && IsAsciiPunct(word[end - 1])) --end;
  std::string out(word.substr(begin, end - begin));
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

double ParseDouble(std::string_view field, std::size_t line_no, const std::string& path) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    Fail(ErrorKind::kFormat, path + ":" + std::to_string(line_no) + ": cannot parse number '" +
                                 std::string(field) + "'");
  }
  return value;
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kFormat, "cannot open " + path.string());
  return in;
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorKind::kFormat, "cannot write " + path.string());
  return out;
}

void StripCarriageReturn(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

// ---------------------------------------------------------------- Vocabulary

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_ = ReservedTokens();
  tokens_.reserve(kReservedIds + tokens.size());
  for (auto& t : tokens) {
    Require(!t.empty(), ErrorKind::kInput, "empty vocabulary token");
    if (ids_.contains(t) || std::find(ReservedTokens().begin(), ReservedTokens().end(), t) !=
                                ReservedTokens().end()) {
      Fail(ErrorKind::kInput, "duplicate vocabulary token '" + t + "'");
    }
    ids_.emplace(t, static_cast<TermId>(tokens_.size()));
    tokens_.push_back(std::move(t));
  }
}

TermId Vocabulary::Lookup(std::string_view token) const {
  return Find(token).value_or(kUnknownId);
}

std::optional<TermId> Vocabulary::Find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::Token(TermId id) const {
  Require(id < tokens_.size(), ErrorKind::kVocabulary,
          "term id " + std::to_string(id) + " outside vocabulary of " +
              std::to_string(tokens_.size()));
  return tokens_[id];
}

std::vector<std::string> Vocabulary::tokens() const {
  return {tokens_.begin() + kReservedIds, tokens_.end()};
}

std::uint64_t Vocabulary::Digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  auto out = OpenForWrite(path);
  for (std::size_t i = kReservedIds; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (line.empty()) {
      Fail(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) + ": empty token");
    }
    tokens.push_back(line);
  }
  try {
    return Vocabulary(std::move(tokens));
  } catch (const Error& e) {
    Fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- tokenizer

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0, start = 0;
  auto flush = [&](std::size_t end) {
    if (end > start) {
      std::string w = Normalize(text.substr(start, end - start));
      if (!w.empty()) words.push_back(std::move(w));
    }
  };
  while (i < text.size()) {
    const std::size_t at = i;
    if (IsUnicodeSpace(DecodeUtf8(text, i))) {
      flush(at);
      start = i;
    }
  }
  flush(text.size());
  return words;
}

TokenIds Tokenize(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
  TokenIds ids;
  for (const auto& w : SplitWords(text)) {
    if (ids.size() >= max_len) break;
    ids.push_back(vocab.Lookup(w));
  }
  return ids;
}

// ---------------------------------------------------------------- corpus

void Corpus::Add(std::string name, std::string text) {
  auto [it, inserted] = docs_.emplace(std::move(name), std::move(text));
  Require(inserted, ErrorKind::kInput, "duplicate document name '" + it->first + "'");
}

const std::string& Corpus::Text(const std::string& name) const {
  auto it = docs_.find(name);
  Require(it != docs_.end(), ErrorKind::kInput, "unknown document '" + name + "'");
  return it->second;
}

Vocabulary BuildVocab(const std::vector<std::string>& texts, std::size_t min_freq) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& w : SplitWords(text)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_freq) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, count] : kept) {
    // Words that collide with a reserved spelling keep mapping to it.
    if (token == "<pad>" || token == "<s>" || token == "<unk>") continue;
    tokens.push_back(std::move(token));
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary BuildVocab(const Corpus& corpus, std::size_t min_freq) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& [name, text] : corpus.docs()) texts.push_back(text);
  return BuildVocab(texts, min_freq);
}

// ---------------------------------------------------------------- files

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<TextRecord> ReadRecords(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  std::vector<TextRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      Fail(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) +
                                   ": expected 'id<TAB>text'");
    }
    records.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return records;
}

void WriteRecords(const std::filesystem::path& path, const std::vector<TextRecord>& records) {
  auto out = OpenForWrite(path);
  for (const auto& r : records) out << r.id << '\t' << r.text << '\n';
}

Corpus ReadCorpus(const std::filesystem::path& path) {
  Corpus corpus;
  for (auto& r : ReadRecords(path)) corpus.Add(std::move(r.id), std::move(r.text));
  return corpus;
}

std::vector<RawTriplet> ReadTriplets(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  std::vector<RawTriplet> triplets;
  std::string line;
  std::size_t line_no = 0;
  const std::string name = path.string();
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 5) {
      Fail(ErrorKind::kFormat, name + ":" + std::to_string(line_no) + ": expected 5 fields, got " +
                                   std::to_string(fields.size()));
    }
    triplets.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                        ParseDouble(fields[3], line_no, name),
                        ParseDouble(fields[4], line_no, name)});
  }
  return triplets;
}

void WriteTriplets(const std::filesystem::path& path, const std::vector<RawTriplet>& triplets) {
  auto out = OpenForWrite(path);
  out.precision(17);
  for (const auto& t : triplets) {
    out << t.query << '\t' << t.positive << '\t' << t.negative << '\t' << t.teacher_pos << '\t'
        << t.teacher_neg << '\n';
  }
}

std::vector<TrainingTriplet> TokenizeTriplets(const Vocabulary& vocab,
                                              const std::vector<RawTriplet>& raw,
                                              std::size_t max_len) {
  std::vector<TrainingTriplet> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    TrainingTriplet t{Tokenize(vocab, raw[i].query, max_len),
                      Tokenize(vocab, raw[i].positive, max_len),
                      Tokenize(vocab, raw[i].negative, max_len), raw[i].teacher_pos,
                      raw[i].teacher_neg};
    if (t.query_tokens.empty() || t.pos_tokens.empty() || t.neg_tokens.empty()) {
      Fail(ErrorKind::kEmptyInput, "triplet " + std::to_string(i + 1) + " has an empty sequence");
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace lsr
