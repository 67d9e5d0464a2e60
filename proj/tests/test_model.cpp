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

#include "doctest.h"
#include "lsr/model.hpp"
#include "test_util.hpp"

namespace lsr {
namespace {

using testing::KindOf;
using testing::RandomTokens;
using testing::TempDir;

ModelConfig Config(BackboneVariant variant, HeadKind head) {
  ModelConfig c;
  c.backbone = {variant, 1, 8, 2, 16, 12, 6, 4};
  c.head = head;
  return c;
}

TEST_SUITE("model") {
  TEST_CASE("allowed backbone and head pairings") {
    CHECK(KindOf([] { SparseEncoder(Config(BackboneVariant::kEncoderOnly, HeadKind::kMlmSingleToken)); }) ==
          ErrorKind::kInput);
    CHECK(KindOf([] { SparseEncoder(Config(BackboneVariant::kEncDecSingleToken, HeadKind::kMlp)); }) ==
          ErrorKind::kInput);
    CHECK_NOTHROW(SparseEncoder(Config(BackboneVariant::kEncDecSingleToken, HeadKind::kMlmSingleToken)));
    CHECK_NOTHROW(SparseEncoder(Config(BackboneVariant::kDecoderMultiTokens, HeadKind::kMlp)));
  }

  TEST_CASE("checkpoint round trip preserves every parameter and the encodings") {
    TempDir dir("ckpt");
    Rng rng(2);
    for (auto [variant, head] : {std::pair{BackboneVariant::kEncoderOnly, HeadKind::kMlp},
                                 std::pair{BackboneVariant::kEncDecSingleToken, HeadKind::kMlmSingleToken},
                                 std::pair{BackboneVariant::kEncDecMultiTokens, HeadKind::kMlmMultiTokens}}) {
      SparseEncoder model(Config(variant, head));
      model.set_vocab_digest(0xABCDEF);
      for (auto& [name, t] : model.NamedParameters()) {
        for (double& v : t->data()) v += rng.Normal(0.0, 0.1);
      }
      model.Save(dir / "m.lsrc");
      SparseEncoder back = SparseEncoder::Load(dir / "m.lsrc");
      CHECK(back == model);
      CHECK(back.vocab_digest() == 0xABCDEFu);
      const TokenIds ids = RandomTokens(rng, 12, 1, 6);
      CHECK(back.Encode(ids) == model.Encode(ids));
      model.Save(dir / "m2.lsrc");
      CHECK(FileDigest(dir / "m.lsrc") == FileDigest(dir / "m2.lsrc"));
    }
  }

  TEST_CASE("corrupted checkpoints raise format errors") {
    TempDir dir("ckpt_bad");
    SparseEncoder(Config(BackboneVariant::kEncoderOnly, HeadKind::kMlp)).Save(dir / "m.lsrc");
    const std::string bytes = testing::ReadText(dir / "m.lsrc");
    std::string magic = bytes;
    magic[1] = '?';
    testing::WriteText(dir / "magic.lsrc", magic);
    CHECK(KindOf([&] { SparseEncoder::Load(dir / "magic.lsrc"); }) == ErrorKind::kFormat);
    testing::WriteText(dir / "cut.lsrc", bytes.substr(0, bytes.size() - 5));
    CHECK(KindOf([&] { SparseEncoder::Load(dir / "cut.lsrc"); }) == ErrorKind::kFormat);
  }

  TEST_CASE("encode agrees with the dense tape output") {
    Rng rng(3);
    SparseEncoder model(Config(BackboneVariant::kDecoderMultiTokens, HeadKind::kMlmMultiTokens));
    for (int trial = 0; trial < 10; ++trial) {
      const TokenIds ids = RandomTokens(rng, 12, 1, 6);
      Tape t;
      const auto bound = model.Bind(t);
      const Tensor& dense = t.value(model.EncodeDense(t, bound, ids));
      CHECK(model.Encode(ids) == SparseVector::FromDense(dense.data()));
    }
  }
}

}  // namespace
}  // namespace lsr
