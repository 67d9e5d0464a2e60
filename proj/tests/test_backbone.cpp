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
#include "lsr/backbone.hpp"
#include "test_util.hpp"

namespace lsr {
namespace {

using testing::KindOf;
using testing::RandomTensor;
using testing::RandomTokens;

constexpr BackboneVariant kVariants[] = {
    BackboneVariant::kEncoderOnly, BackboneVariant::kDecoderMultiTokens,
    BackboneVariant::kEncDecSingleToken, BackboneVariant::kEncDecMultiTokens};

BackboneConfig Small(BackboneVariant variant, std::uint64_t seed = 1) {
  BackboneConfig c;
  c.variant = variant;
  c.num_layers = 2;
  c.d_model = 8;
  c.num_heads = 2;
  c.d_ff = 16;
  c.vocab_size = 20;
  c.max_seq_len = 8;
  c.seed = seed;
  return c;
}

bool RowsEqual(const Tensor& a, const Tensor& b, std::size_t row) {
  for (std::size_t c = 0; c < a.cols(); ++c) {
    if (a.at(row, c) != b.at(row, c)) return false;
  }
  return true;
}

double MaxRowDiff(const Tensor& a, const Tensor& b, std::size_t row) {
  double d = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) d = std::max(d, std::abs(a.at(row, c) - b.at(row, c)));
  return d;
}

TermId OtherToken(TermId t, std::size_t vocab) {
  return static_cast<TermId>(3 + (t - 3 + 1) % (vocab - 3));
}

TEST_SUITE("backbones") {
  TEST_CASE("config validation") {
    BackboneConfig c = Small(BackboneVariant::kEncoderOnly);
    c.num_heads = 3;
    CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kInput);
    c = Small(BackboneVariant::kEncoderOnly);
    c.vocab_size = 3;
    CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kInput);
    CHECK(KindOf([] { ParseBackboneVariant("Encoder"); }) == ErrorKind::kUsage);
    for (auto v : kVariants) CHECK(ParseBackboneVariant(ToString(v)) == v);
  }

  TEST_CASE("attention fixtures") {
    Tape t;
    Var q = t.Constant(Tensor::Matrix({{0.3, -1.2}}));
    Var k = t.Constant(Tensor::Matrix({{2.0, 0.5}}));
    Var v = t.Constant(Tensor::Matrix({{7.0, -3.0}}));
    CHECK(t.value(ScaledDotProductAttention(t, q, k, v, 1, MaskSpec::kBidirectional)) ==
          Tensor::Matrix({{7.0, -3.0}}));

    Var qq = t.Constant(Tensor::Matrix({{0}, {1}}));
    const Tensor& bi = t.value(ScaledDotProductAttention(t, qq, qq, qq, 1, MaskSpec::kBidirectional));
    CHECK(bi.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    // Causal: the first position sees only itself.
    Var v2 = t.Constant(Tensor::Matrix({{1.0}, {100.0}}));
    Var k2 = t.Constant(Tensor::Matrix({{5.0}, {-5.0}}));
    const Tensor& causal = t.value(ScaledDotProductAttention(t, k2, k2, v2, 1, MaskSpec::kCausal));
    CHECK(causal.at(0, 0) == 1.0);
  }

  TEST_CASE("shape contracts and token errors") {
    Rng rng(2);
    for (auto variant : kVariants) {
      Backbone b(Small(variant));
      for (int trial = 0; trial < 5; ++trial) {
        const TokenIds ids = RandomTokens(rng, 20, 1, 8);
        const Tensor h = b.HiddenStates(ids);
        const std::size_t expected = variant == BackboneVariant::kEncDecSingleToken ? 1 : ids.size();
        CHECK(h.shape() == Shape{expected, 8});
      }
      CHECK(KindOf([&] { b.HiddenStates(TokenIds{}); }) == ErrorKind::kEmptyInput);
      CHECK(KindOf([&] { b.HiddenStates(TokenIds(9, 5)); }) == ErrorKind::kLength);
      CHECK(KindOf([&] { b.HiddenStates(TokenIds{3, 20}); }) == ErrorKind::kVocabulary);
    }
  }

  TEST_CASE("variant entry points reject other backbones") {
    Backbone b(Small(BackboneVariant::kEncoderOnly));
    Tape t;
    const auto bound = b.Bind(t);
    const TermId ids[] = {3, 4};
    CHECK(KindOf([&] { b.EncodeDecoderMultiTokens(t, bound, ids); }) == ErrorKind::kContract);
  }

  TEST_CASE("determinism: same seed and input give identical states") {
    Rng rng(4);
    for (auto variant : kVariants) {
      Backbone a(Small(variant, 9)), b(Small(variant, 9));
      const TokenIds ids = RandomTokens(rng, 20, 1, 8);
      CHECK(a.HiddenStates(ids) == b.HiddenStates(ids));
      CHECK(a.HiddenStates(ids) == a.HiddenStates(ids));
    }
  }

  TEST_CASE("encoder-only is bidirectional") {
    Backbone b(Small(BackboneVariant::kEncoderOnly));
    TokenIds ids = {4, 7, 9, 11};
    const Tensor before = b.HiddenStates(ids);
    ids.back() = 12;
    CHECK(MaxRowDiff(before, b.HiddenStates(ids), 0) > 1e-9);
  }

  TEST_CASE("decoder multi-tokens: causal invariance on random inputs") {
    Rng rng(21);
    Backbone b(Small(BackboneVariant::kDecoderMultiTokens, 21));
    for (int trial = 0; trial < 50; ++trial) {
      const TokenIds ids = RandomTokens(rng, 20, 2, 8);
      const Tensor base = b.HiddenStates(ids);
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        TokenIds changed = ids;
        for (std::size_t j = i + 1; j < ids.size(); ++j) changed[j] = OtherToken(ids[j], 20);
        const Tensor h = b.HiddenStates(changed);
        for (std::size_t r = 0; r <= i; ++r) CHECK(RowsEqual(base, h, r));
      }
    }
  }

  TEST_CASE("encdec single-token output depends on every input token") {
    Backbone b(Small(BackboneVariant::kEncDecSingleToken));
    const TokenIds ids = {4, 7, 9, 11, 5};
    const Tensor base = b.HiddenStates(ids);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      TokenIds changed = ids;
      changed[j] = OtherToken(ids[j], 20);
      CHECK(MaxRowDiff(base, b.HiddenStates(changed), 0) > 1e-9);
    }
    CHECK(b.HiddenStates(TokenIds{4}).shape() == b.HiddenStates(TokenIds{4, 5}).shape());
  }

  TEST_CASE("encdec multi-tokens: h_1 sees the last token, decoder-only does not") {
    Rng rng(33);
    Backbone cross(Small(BackboneVariant::kEncDecMultiTokens, 33));
    Backbone causal(Small(BackboneVariant::kDecoderMultiTokens, 33));
    for (int trial = 0; trial < 50; ++trial) {
      const TokenIds ids = RandomTokens(rng, 20, 2, 8);
      TokenIds changed = ids;
      changed.back() = OtherToken(ids.back(), 20);
      CHECK(MaxRowDiff(cross.HiddenStates(ids), cross.HiddenStates(changed), 0) > 1e-9);
      CHECK(RowsEqual(causal.HiddenStates(ids), causal.HiddenStates(changed), 0));
    }
  }

  TEST_CASE("encdec multi-tokens with cross-attention ablated is causal") {
    Rng rng(8);
    Backbone b(Small(BackboneVariant::kEncDecMultiTokens, 8));
    for (auto& layer : b.decoder()->layers) {
      std::fill(layer.cross_attn->wo.data().begin(), layer.cross_attn->wo.data().end(), 0.0);
      std::fill(layer.cross_attn->bo.data().begin(), layer.cross_attn->bo.data().end(), 0.0);
    }
    for (int trial = 0; trial < 20; ++trial) {
      const TokenIds ids = RandomTokens(rng, 20, 2, 8);
      const Tensor base = b.HiddenStates(ids);
      const std::size_t i = rng.Below(ids.size() - 1);
      TokenIds changed = ids;
      for (std::size_t j = i + 1; j < ids.size(); ++j) changed[j] = OtherToken(ids[j], 20);
      const Tensor h = b.HiddenStates(changed);
      for (std::size_t r = 0; r <= i; ++r) CHECK(RowsEqual(base, h, r));
    }
  }

  TEST_CASE("parameter count is a pure function of the config") {
    const std::size_t V = 20, d = 8, f = 16, S = 8, L = 2;
    const std::size_t ln = 2 * d, attn = 4 * (d * d + d), ffn = d * f + f + f * d + d;
    const std::size_t enc_layer = 2 * ln + attn + ffn;
    const std::size_t dec_layer = 3 * ln + 2 * attn + ffn;
    const std::size_t stack_extra = (S + 1) * d + ln;
    const std::size_t enc = stack_extra + L * enc_layer;
    const std::size_t dec = stack_extra + L * dec_layer;
    CHECK(Backbone(Small(BackboneVariant::kEncoderOnly)).ParameterCount() == V * d + enc);
    CHECK(Backbone(Small(BackboneVariant::kDecoderMultiTokens)).ParameterCount() == V * d + enc);
    CHECK(Backbone(Small(BackboneVariant::kEncDecSingleToken)).ParameterCount() == V * d + enc + dec);
    CHECK(Backbone(Small(BackboneVariant::kEncDecMultiTokens)).ParameterCount() == V * d + enc + dec);
    for (auto variant : kVariants) {
      Backbone a(Small(variant, 1)), b(Small(variant, 2));
      CHECK(a.ParameterCount() == b.ParameterCount());
      std::size_t total = 0;
      for (auto& [name, tensor] : a.NamedParameters()) total += tensor->size();
      CHECK(total == a.ParameterCount());
    }
  }

  TEST_CASE("single shared token embedding table") {
    for (auto variant : kVariants) {
      Backbone b(Small(variant));
      std::size_t tables = 0;
      std::set<std::string> names;
      for (auto& [name, tensor] : b.NamedParameters()) {
        CHECK(names.insert(name).second);
        if (tensor->shape() == Shape{20, 8}) {
          ++tables;
          CHECK(tensor == &b.token_embeddings());
        }
      }
      CHECK(tables == 1);
    }
  }

  TEST_CASE("init statistics: weights normal(0, 0.02), biases zero, gains one") {
    Backbone b(Small(BackboneVariant::kEncDecMultiTokens));
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (auto& [name, tensor] : b.NamedParameters()) {
      const bool gain = name.find("gain") != std::string::npos;
      const bool bias = name.ends_with(".bias") || name.ends_with(".bq") || name.ends_with(".bk") || name.ends_with(".bv") ||
                        name.ends_with(".bo") || name.ends_with(".b1") || name.ends_with(".b2");
      for (double v : tensor->data()) {
        if (gain) {
          CHECK(v == 1.0);
        } else if (bias) {
          CHECK(v == 0.0);
        } else {
          sum += v;
          sq += v * v;
          ++n;
        }
      }
    }
    const double mean = sum / n, std = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.002);
    CHECK(std == doctest::Approx(0.02).epsilon(0.05));
  }

  TEST_CASE("every backbone parameter receives gradient") {
    Rng rng(12);
    for (auto variant : kVariants) {
      Backbone b(Small(variant, 12));
      auto params = b.NamedParameters();
      for (auto& [name, tensor] : params) tensor->set_requires_grad(true);
      for (int seq = 0; seq < 4; ++seq) {
        Tape t;
        const auto bound = b.Bind(t);
        const TokenIds ids = RandomTokens(rng, 20, 8, 8);
        Var h = b.Encode(t, bound, ids);
        t.Backward(t.Dot(h, t.Constant(RandomTensor(rng, t.value(h).shape()))));
      }
      for (auto& [name, tensor] : params) {
        // Key biases shift every logit of a row equally, so softmax ignores them;
        // a one-position decoder has the same property for its query/key maps.
        if (name.ends_with(".bk")) continue;
        if (variant == BackboneVariant::kEncDecSingleToken && name.starts_with("decoder.") &&
            name.find("self_attn.w") != std::string::npos &&
            (name.ends_with(".wq") || name.ends_with(".wk"))) {
          continue;
        }
        if (variant == BackboneVariant::kEncDecSingleToken && name.starts_with("decoder.") &&
            name.ends_with("self_attn.bq")) {
          continue;
        }
        double largest = 0.0;
        for (double g : tensor->grad()) largest = std::max(largest, std::abs(g));
        INFO(ToString(variant), " ", name);
        CHECK(largest > 1e-10);
      }
    }
  }
}

}  // namespace
}  // namespace lsr
