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

#include "lsr/heads.hpp"

#include <string>

#include "lsr/error.hpp"
#include "lsr/random.hpp"

namespace lsr {

std::string_view ToString(HeadKind kind) {
  switch (kind) {
    case HeadKind::kMlp: return "MLP";
    case HeadKind::kMlmSingleToken: return "MLM_SingleToken";
    case HeadKind::kMlmMultiTokens: return "MLM_MultiTokens";
  }
  return "unknown";
}

HeadKind ParseHeadKind(std::string_view name) {
  for (auto k : {HeadKind::kMlp, HeadKind::kMlmSingleToken, HeadKind::kMlmMultiTokens}) {
    if (ToString(k) == name) return k;
  }
  Fail(ErrorKind::kUsage, "unknown head kind '" + std::string(name) +
                              "' (expected MLP, MLM_SingleToken or MLM_MultiTokens)");
}

Head::Head(HeadKind kind, std::size_t d_model, std::size_t vocab_size, std::uint64_t seed,
           Pooling pooling)
    : kind_(kind), pooling_(pooling), vocab_size_(vocab_size) {
  if (kind_ == HeadKind::kMlp) {
    Rng rng(seed);
    mlp_weight_ = Tensor({d_model, 1}, true);
    for (double& v : mlp_weight_.data()) v = rng.Normal(0.0, 0.02);
    mlp_bias_ = Tensor({1, 1}, true);
  } else {
    vocab_bias_ = Tensor({1, vocab_size}, true);
  }
}

std::vector<NamedTensor> Head::NamedParameters() {
  if (kind_ == HeadKind::kMlp) return {{"head.mlp_weight", &mlp_weight_}, {"head.mlp_bias", &mlp_bias_}};
  return {{"head.vocab_bias", &vocab_bias_}};
}

BoundHead Head::Bind(Tape& tape) {
  BoundHead b;
  if (kind_ == HeadKind::kMlp) {
    b.mlp_weight = tape.Parameter(mlp_weight_);
    b.mlp_bias = tape.Parameter(mlp_bias_);
  } else {
    b.vocab_bias = tape.Parameter(vocab_bias_);
  }
  return b;
}

Var Head::Apply(Tape& tape, const BoundHead& bound, Var hidden, std::span<const TermId> tokens,
                Var embeddings) const {
  switch (kind_) {
    case HeadKind::kMlp:
      return MlpHeadDense(tape, hidden, tokens, bound.mlp_weight, bound.mlp_bias, vocab_size_);
    case HeadKind::kMlmSingleToken:
      Require(tape.value(hidden).rows() == 1, ErrorKind::kContract,
              "MLM_SingleToken head needs exactly one hidden state, got " +
                  std::to_string(tape.value(hidden).rows()));
      return MlmHeadDense(tape, hidden, embeddings, bound.vocab_bias, pooling_);
    case HeadKind::kMlmMultiTokens:
      return MlmHeadDense(tape, hidden, embeddings, bound.vocab_bias, pooling_);
  }
  Fail(ErrorKind::kContract, "unknown head kind");
}

Var MlpHeadDense(Tape& tape, Var hidden, std::span<const TermId> tokens, Var weight, Var bias,
                 std::size_t vocab_size) {
  const std::size_t n = tape.value(hidden).rows();
  Require(n == tokens.size(), ErrorKind::kShape,
          "MLP head: " + std::to_string(n) + " hidden states for " +
              std::to_string(tokens.size()) + " tokens");
  // [n×1] per-position importance, saturated, then summed into its term.
  Var importance = tape.Relu(tape.AddRow(tape.MatMul(hidden, weight), bias));
  return tape.ScatterAdd(tape.Log1p(importance), tokens, vocab_size);
}

Var MlmHeadDense(Tape& tape, Var hidden, Var embeddings, Var vocab_bias, Pooling pooling) {
  Var logits = tape.AddRow(tape.MatMulTransposed(hidden, embeddings), vocab_bias);
  Var saturated = tape.Log1p(tape.Relu(logits));
  Var pooled = pooling == Pooling::kMax ? tape.MaxOverAxis(saturated, 0).values
                                        : tape.SumOverAxis(saturated, 0);
  const std::size_t width = tape.value(pooled).size();
  return tape.Reshape(pooled, {1, width});
}

SparseVector MlpHead(const Tensor& hidden, std::span<const TermId> tokens, const Head& head) {
  Require(head.kind() == HeadKind::kMlp, ErrorKind::kContract, "MlpHead needs an MLP head");
  Tape tape;
  Var out = MlpHeadDense(tape, tape.Constant(hidden), tokens, tape.Constant(head.mlp_weight()),
                         tape.Constant(head.mlp_bias()), head.vocab_size());
  return SparseVector::FromDense(tape.value(out).data());
}

SparseVector MlmHead(const Tensor& hidden, const Tensor& embeddings, const Head& head) {
  Require(head.kind() != HeadKind::kMlp, ErrorKind::kContract, "MlmHead needs an MLM head");
  Tape tape;
  BoundHead bound{{}, {}, tape.Constant(head.vocab_bias())};
  Var out = head.Apply(tape, bound, tape.Constant(hidden), {}, tape.Constant(embeddings));
  return SparseVector::FromDense(tape.value(out).data());
}

bool MlmMultiTokenEqualsPositionwiseMax(const Tensor& hidden, const Tensor& embeddings,
                                        const Tensor& vocab_bias) {
  Head multi(HeadKind::kMlmMultiTokens, hidden.cols(), embeddings.rows(), 0);
  Head single(HeadKind::kMlmSingleToken, hidden.cols(), embeddings.rows(), 0);
  multi.vocab_bias() = vocab_bias;
  single.vocab_bias() = vocab_bias;
  const SparseVector pooled = MlmHead(hidden, embeddings, multi);
  SparseVector expected;
  for (std::size_t j = 0; j < hidden.rows(); ++j) {
    Tensor row({1, hidden.cols()},
               std::vector<double>(hidden.data().begin() + static_cast<std::ptrdiff_t>(j * hidden.cols()),
                                   hidden.data().begin() + static_cast<std::ptrdiff_t>((j + 1) * hidden.cols())));
    expected = Max(expected, MlmHead(row, embeddings, single));
  }
  return pooled == expected;
}

}  // namespace lsr
