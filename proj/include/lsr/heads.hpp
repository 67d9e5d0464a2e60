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
#include <span>
#include <string_view>
#include <vector>

#include "lsr/backbone.hpp"
#include "lsr/sparse_vector.hpp"
#include "lsr/tensor.hpp"

namespace lsr {

enum class HeadKind { kMlp, kMlmSingleToken, kMlmMultiTokens };

std::string_view ToString(HeadKind kind);
HeadKind ParseHeadKind(std::string_view name);

enum class Pooling { kMax, kSum };

struct BoundHead {
  Var mlp_weight, mlp_bias;  // MLP only
  Var vocab_bias;            // MLM only
};

// Sparse representation head. The MLP head owns W [d×1] and a scalar bias;
// MLM heads own only a per-term bias and project onto the backbone's token
// embedding table.
class Head {
 public:
  Head(HeadKind kind, std::size_t d_model, std::size_t vocab_size, std::uint64_t seed,
       Pooling pooling = Pooling::kMax);

  HeadKind kind() const { return kind_; }
  Pooling pooling() const { return pooling_; }
  std::size_t vocab_size() const { return vocab_size_; }
  Tensor& mlp_weight() { return mlp_weight_; }
  Tensor& mlp_bias() { return mlp_bias_; }
  Tensor& vocab_bias() { return vocab_bias_; }
  const Tensor& mlp_weight() const { return mlp_weight_; }
  const Tensor& mlp_bias() const { return mlp_bias_; }
  const Tensor& vocab_bias() const { return vocab_bias_; }

  std::vector<NamedTensor> NamedParameters();
  BoundHead Bind(Tape& tape);

  // Dense [1×|V|] activations before zero-dropping. `tokens` are the input ids
  // (MLP indicator); `embeddings` is the bound token embedding table (MLM).
  Var Apply(Tape& tape, const BoundHead& bound, Var hidden, std::span<const TermId> tokens,
            Var embeddings) const;

 private:
  HeadKind kind_;
  Pooling pooling_;
  std::size_t vocab_size_;
  Tensor mlp_weight_, mlp_bias_, vocab_bias_;
};

// weight(v) = Σ_j [v = t_j]·log(1 + ReLU(h_j·W + b)), dense [1×|V|].
Var MlpHeadDense(Tape& tape, Var hidden, std::span<const TermId> tokens, Var weight, Var bias,
                 std::size_t vocab_size);

// weight(v) = pool_j log(1 + ReLU(h_jᵀ·e_v + b_v)), dense [1×|V|]. Max pooling
// unless `pooling` says otherwise.
Var MlmHeadDense(Tape& tape, Var hidden, Var embeddings, Var vocab_bias,
                 Pooling pooling = Pooling::kMax);

// Tensor-level forms returning the sparse view.
SparseVector MlpHead(const Tensor& hidden, std::span<const TermId> tokens, const Head& head);
SparseVector MlmHead(const Tensor& hidden, const Tensor& embeddings, const Head& head);

// True iff the multi-token MLM output over all rows of `hidden` equals the
// entrywise maximum of single-token outputs over each row, exactly.
bool MlmMultiTokenEqualsPositionwiseMax(const Tensor& hidden, const Tensor& embeddings,
                                        const Tensor& vocab_bias);

}  // namespace lsr
