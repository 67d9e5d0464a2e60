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

#include <set>

#include "doctest.h"
#include "lsr/text.hpp"
#include "test_util.hpp"

namespace lsr {
namespace {

using testing::KindOf;
using testing::TempDir;

TEST_SUITE("tokenizer_corpus") {
  TEST_CASE("build_vocab respects min_freq and reserves specials") {
    const Vocabulary v = BuildVocab(std::vector<std::string>{"a a b"}, 2);
    CHECK(v.Find("a").has_value());
    CHECK_FALSE(v.Find("b").has_value());
    CHECK(v.size() == kReservedIds + 1);

    const Vocabulary empty = BuildVocab(std::vector<std::string>{""}, 1);
    CHECK(empty.size() == kReservedIds);
    CHECK(empty.Token(kPadId) == "<pad>");
    CHECK(empty.Token(kStartId) == "<s>");
    CHECK(empty.Token(kUnknownId) == "<unk>");
  }

  TEST_CASE("build_vocab is deterministic and frequency ordered") {
    const std::vector<std::string> texts = {"c b a", "b a", "a"};
    const Vocabulary v1 = BuildVocab(texts, 1), v2 = BuildVocab(texts, 1);
    CHECK(v1 == v2);
    CHECK(v1.Digest() == v2.Digest());
    CHECK(*v1.Find("a") == 3);
    CHECK(*v1.Find("b") == 4);
    CHECK(*v1.Find("c") == 5);
  }

  TEST_CASE("tokenize fixtures") {
    const Vocabulary v = BuildVocab(std::vector<std::string>{"hello world"}, 1);
    CHECK(Tokenize(v, "Hello, world", 64) == TokenIds{*v.Find("hello"), *v.Find("world")});
    CHECK(Tokenize(v, "mystery", 64) == TokenIds{kUnknownId});
    CHECK(Tokenize(v, "  ,,  ", 64).empty());
    std::string long_text;
    for (int i = 0; i < 200; ++i) long_text += (i % 2 ? "hello " : "world ");
    const TokenIds ids = Tokenize(v, long_text, 64);
    REQUIRE(ids.size() == 64);
    CHECK(ids[0] == *v.Find("world"));
    CHECK(ids[1] == *v.Find("hello"));
  }

  TEST_CASE("split words normalizes case and punctuation") {
    CHECK(SplitWords("Hi!  (there)\tYOU.") == std::vector<std::string>{"hi", "there", "you"});
    CHECK(SplitWords("don't") == std::vector<std::string>{"don't"});
    CHECK(SplitWords("caf\xC3\xA9\xC2\xA0ok") == std::vector<std::string>{"caf\xC3\xA9", "ok"});
  }

  TEST_CASE("ids are in range and map back to unique tokens") {
    Rng rng(1);
    std::vector<std::string> texts;
    for (int i = 0; i < 50; ++i) {
      std::string t;
      for (int j = 0; j < 10; ++j) t += "w" + std::to_string(rng.Below(80)) + " ";
      texts.push_back(t);
    }
    const Vocabulary v = BuildVocab(texts, 2);
    std::set<std::string> seen;
    for (TermId id = 0; id < v.size(); ++id) CHECK(seen.insert(v.Token(id)).second);
    for (const auto& t : texts) {
      for (TermId id : Tokenize(v, t, 100)) {
        CHECK(id < v.size());
        if (id != kUnknownId) CHECK(v.Lookup(v.Token(id)) == id);
      }
    }
  }

  TEST_CASE("vocabulary file round trip") {
    TempDir dir("vocab");
    const Vocabulary v = BuildVocab(std::vector<std::string>{"x y y z z z"}, 1);
    v.Save(dir / "v.txt");
    CHECK(testing::ReadText(dir / "v.txt") == "z\ny\nx\n");
    CHECK(Vocabulary::Load(dir / "v.txt") == v);
  }

  TEST_CASE("corpus and triplet files") {
    TempDir dir("corpus");
    testing::WriteText(dir / "c.tsv", "d1\tfirst doc\nd2\tsecond doc\n");
    const Corpus c = ReadCorpus(dir / "c.tsv");
    CHECK(c.size() == 2);
    CHECK(c.Text("d2") == "second doc");
    testing::WriteText(dir / "dup.tsv", "d1\ta\nd1\tb\n");
    CHECK(KindOf([&] { ReadCorpus(dir / "dup.tsv"); }) == ErrorKind::kInput);

    const std::vector<RawTriplet> raw = {{"q", "pos text", "neg text", 2.5, -1.0}};
    WriteTriplets(dir / "t.tsv", raw);
    const auto back = ReadTriplets(dir / "t.tsv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].positive == "pos text");
    CHECK(back[0].teacher_pos == 2.5);
    CHECK(back[0].teacher_neg == -1.0);

    testing::WriteText(dir / "bad.tsv", "q\tp\tn\t1.0\n");
    try {
      ReadTriplets(dir / "bad.tsv");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
      CHECK(std::string(e.what()).find("bad.tsv:1:") != std::string::npos);
    }

    const Vocabulary v = BuildVocab(std::vector<std::string>{"pos neg text q"}, 1);
    const std::vector<RawTriplet> empty_query = {{"!!", "pos", "neg", 1, 0}};
    CHECK(KindOf([&] { TokenizeTriplets(v, empty_query, 8); }) == ErrorKind::kEmptyInput);
  }
}

}  // namespace
}  // namespace lsr
