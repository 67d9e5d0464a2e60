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

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "lsr/heads.hpp"
#include "lsr/model.hpp"
#include "lsr/sparse_vector.hpp"
#include "test_util.hpp"

namespace lsr {
namespace {

using testing::KindOf;
using testing::RandomTensor;
using testing::RandomTokens;

Head MlpWith(double w, double b, std::size_t vocab) {
  Head head(HeadKind::kMlp, 1, vocab, 0);
  head.mlp_weight() = Tensor::Matrix({{w}});
  head.mlp_bias() = Tensor::Matrix({{b}});
  return head;
}

SparseVector Sv(std::vector<SparseEntry> e) { return SparseVector(std::move(e)); }

TEST_SUITE("heads") {
  TEST_CASE("MLP head: duplicate term sums saturated contributions") {
    const Head head = MlpWith(1.0, 0.0, 8);
    const TermId tokens[] = {5, 5};
    const SparseVector v = MlpHead(Tensor::Matrix({{1}, {3}}), tokens, head);
    REQUIRE(v.size() == 1);
    CHECK(v.Weight(5) == doctest::Approx(std::log(2.0) + std::log(4.0)).epsilon(1e-12));
    CHECK(std::abs(v.Weight(5) - 2.0794415416798357) < 1e-12);
  }

  TEST_CASE("MLP head: clamped and absent terms") {
    const Head head = MlpWith(1.0, -3.0, 8);
    const TermId tokens[] = {4, 6};
    // h·W + b = 1 - 3 = -2 for term 4; 5 - 3 = 2 for term 6.
    const SparseVector v = MlpHead(Tensor::Matrix({{1}, {5}}), tokens, head);
    CHECK_FALSE(v.Contains(4));
    CHECK(v.Weight(6) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK_FALSE(v.Contains(7));
    CHECK(v.Support() == std::vector<TermId>{6});
  }

  TEST_CASE("MLP head: length mismatch") {
    const Head head = MlpWith(1.0, 0.0, 8);
    const TermId tokens[] = {4};
    CHECK(KindOf([&] { MlpHead(Tensor::Matrix({{1}, {2}}), tokens, head); }) == ErrorKind::kShape);
  }

  TEST_CASE("MLM head fixtures") {
    Head head(HeadKind::kMlmMultiTokens, 1, 4, 0);
    const Tensor emb = Tensor::Matrix({{0}, {0}, {0}, {1}});
    head.vocab_bias() = Tensor::Matrix({{-1, -1, -1, 0}});
    const SparseVector zero = MlmHead(Tensor::Matrix({{0}}), emb, head);
    CHECK(zero.empty());
    const SparseVector v = MlmHead(Tensor::Matrix({{1}, {3}}), emb, head);
    REQUIRE(v.size() == 1);
    CHECK(v.Weight(3) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(std::abs(v.Weight(3) - 1.3862943611198906) < 1e-12);
  }

  TEST_CASE("MLM single-token requires one state; m == 1 makes MT equal ST") {
    Rng rng(1);
    Head st(HeadKind::kMlmSingleToken, 3, 6, 0);
    Head mt(HeadKind::kMlmMultiTokens, 3, 6, 0);
    const Tensor emb = RandomTensor(rng, {6, 3});
    CHECK(KindOf([&] { MlmHead(RandomTensor(rng, {2, 3}), emb, st); }) == ErrorKind::kContract);
    const Tensor h = RandomTensor(rng, {1, 3});
    CHECK(MlmHead(h, emb, st) == MlmHead(h, emb, mt));
  }

  TEST_CASE("sum pooling is available behind the flag") {
    Head head(HeadKind::kMlmMultiTokens, 1, 2, 0, Pooling::kSum);
    const Tensor emb = Tensor::Matrix({{1}, {-1}});
    const SparseVector v = MlmHead(Tensor::Matrix({{1}, {3}}), emb, head);
    CHECK(v.Weight(0) == doctest::Approx(std::log(2.0) + std::log(4.0)).epsilon(1e-12));
    CHECK_FALSE(v.Contains(1));
  }

  TEST_CASE("MLP support stays within input tokens (1000 random inputs)") {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t d = 1 + rng.Below(6), vocab = 4 + rng.Below(40);
      Head head(HeadKind::kMlp, d, vocab, rng.NextU64());
      head.mlp_weight() = RandomTensor(rng, {d, 1});
      head.mlp_bias() = RandomTensor(rng, {1, 1});
      const TokenIds tokens = RandomTokens(rng, vocab, 1, 10);
      const SparseVector v = MlpHead(RandomTensor(rng, {tokens.size(), d}), tokens, head);
      const std::set<TermId> input(tokens.begin(), tokens.end());
      for (TermId term : v.Support()) CHECK(input.count(term) == 1);
      for (const auto& e : v.entries()) CHECK(e.weight > 0.0);
    }
  }

  TEST_CASE("MLM multi-tokens equals positionwise max of single-token (1000 random inputs)") {
    Rng rng(202);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t d = 1 + rng.Below(6), vocab = 4 + rng.Below(40), m = 1 + rng.Below(6);
      Head mt(HeadKind::kMlmMultiTokens, d, vocab, 0);
      Head st(HeadKind::kMlmSingleToken, d, vocab, 0);
      mt.vocab_bias() = st.vocab_bias() = RandomTensor(rng, {1, vocab}, 0.5);
      const Tensor emb = RandomTensor(rng, {vocab, d});
      const Tensor h = RandomTensor(rng, {m, d});
      SparseVector expected;
      for (std::size_t r = 0; r < m; ++r) {
        Tensor row({1, d});
        for (std::size_t c = 0; c < d; ++c) row.at(0, c) = h.at(r, c);
        expected = Max(expected, MlmHead(row, emb, st));
      }
      CHECK(MlmHead(h, emb, mt) == expected);
      CHECK(MlmMultiTokenEqualsPositionwiseMax(h, emb, mt.vocab_bias()));
    }
  }

  TEST_CASE("positionwise-max oracle on constructed fixtures") {
    // Term 0 peaks at position 0, term 1 at position 2.
    const Tensor emb = Tensor::Matrix({{1, 0}, {0, 1}});
    const Tensor bias = Tensor::Matrix({{0, 0}});
    CHECK(MlmMultiTokenEqualsPositionwiseMax(Tensor::Matrix({{5, 0}, {1, 1}, {0, 4}}), emb, bias));
    CHECK(MlmMultiTokenEqualsPositionwiseMax(Tensor::Matrix({{2, -1}}), emb, bias));
  }

  TEST_CASE("MLM head can expand beyond the input tokens") {
    ModelConfig config;
    config.backbone = {BackboneVariant::kEncoderOnly, 1, 4, 1, 8, 12, 6, 3};
    config.head = HeadKind::kMlmMultiTokens;
    SparseEncoder model(config);
    auto& bias = model.head().vocab_bias();
    std::fill(bias.data().begin(), bias.data().end(), 1.0);
    const TermId tokens[] = {3};
    const SparseVector v = model.Encode(tokens);
    bool expanded = false;
    for (TermId t : v.Support()) expanded = expanded || t != 3;
    CHECK(expanded);
  }

  TEST_CASE("head parameter ownership") {
    Head mlp(HeadKind::kMlp, 4, 10, 0);
    Head mlm(HeadKind::kMlmMultiTokens, 4, 10, 0);
    std::vector<std::string> a, b;
    for (auto& [name, t] : mlp.NamedParameters()) a.push_back(name);
    for (auto& [name, t] : mlm.NamedParameters()) b.push_back(name);
    CHECK(a.size() == 2);
    REQUIRE(b.size() == 1);
    CHECK(mlm.vocab_bias().shape() == Shape{1, 10});
    for (double v : mlm.vocab_bias().data()) CHECK(v == 0.0);
    CHECK(KindOf([] { ParseHeadKind("MLM"); }) == ErrorKind::kUsage);
  }

  TEST_CASE("saturation is monotone in the pre-activation") {
    double prev = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.01) {
      const double y = std::log1p(std::max(0.0, x));
      CHECK(y >= prev);
      prev = y;
    }
  }

  TEST_CASE("sparse_dot fixtures and laws") {
    CHECK(SparseDot(Sv({{0, 2}}), Sv({{1, 3}})) == 0.0);
    CHECK(SparseDot(Sv({{0, 2}, {1, 1}}), Sv({{0, 3}})) == 6.0);
    CHECK(SparseDot(SparseVector(), SparseVector()) == 0.0);
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> da(20), db(20);
      for (auto& v : da) v = rng.Uniform() < 0.3 ? rng.Uniform(0.0, 2.0) : 0.0;
      for (auto& v : db) v = rng.Uniform() < 0.3 ? rng.Uniform(0.0, 2.0) : 0.0;
      const SparseVector a = SparseVector::FromDense(da), b = SparseVector::FromDense(db);
      CHECK(SparseDot(a, b) == SparseDot(b, a));
      CHECK(SparseDot(a, b) >= 0.0);
      CHECK((SparseDot(a, a) == 0.0) == a.empty());
    }
  }

  TEST_CASE("sparse vector invariants") {
    const double dense[] = {0.0, 1.5, 0.0, 2.0};
    const SparseVector v = SparseVector::FromDense(dense);
    CHECK(v.size() == 2);
    CHECK(v.Support() == std::vector<TermId>{1, 3});
    CHECK(Sv({{4, 0.0}, {2, 1.0}}).Support() == std::vector<TermId>{2});
    CHECK(KindOf([] { Sv({{1, -1.0}}); }) == ErrorKind::kInput);
    CHECK(KindOf([] { Sv({{1, 1.0}, {1, 2.0}}); }) == ErrorKind::kInput);
    CHECK(KindOf([] { Sv({{1, std::nan("")}}); }) == ErrorKind::kInput);
  }

  TEST_CASE("sparse vector text format") {
    const SparseVector v = Sv({{7, 0.5}, {2, 1.25}});
    const std::string line = FormatSparseLine("doc1", v);
    CHECK(line == "doc1\t2:1.250000 7:0.500000");
    const NamedVector back = ParseSparseLine(line);
    CHECK(back.id == "doc1");
    CHECK(back.vector == v);
    CHECK(FormatSparseLine("empty", SparseVector()) == "empty\t");
    CHECK(ParseSparseLine("empty\t").vector.empty());
    CHECK(KindOf([] { ParseSparseLine("x\t3:abc", 4); }) == ErrorKind::kFormat);
    CHECK(KindOf([] { ParseSparseLine("no-tab", 1); }) == ErrorKind::kFormat);
  }
}

}  // namespace
}  // namespace lsr
