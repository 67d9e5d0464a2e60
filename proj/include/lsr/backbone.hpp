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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsr/tensor.hpp"

namespace lsr {

enum class BackboneVariant {
  kEncoderOnly,
  kDecoderMultiTokens,
  kEncDecSingleToken,
  kEncDecMultiTokens,
};

std::string_view ToString(BackboneVariant variant);
// Accepts the names printed by ToString; raises a usage error otherwise.
BackboneVariant ParseBackboneVariant(std::string_view name);

struct BackboneConfig {
  BackboneVariant variant = BackboneVariant::kEncoderOnly;
  std::size_t num_layers = 2;
  std::size_t d_model = 64;
  std::size_t num_heads = 4;
  // Zero selects 4 * d_model.
  std::size_t d_ff = 0;
  std::size_t vocab_size = 0;
  std::size_t max_seq_len = 64;
  std::uint64_t seed = 0;

  std::size_t ffn_width() const { return d_ff ? d_ff : 4 * d_model; }
  // Raises an input error naming the first violated constraint.
  void Validate() const;

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

enum class MaskSpec { kBidirectional, kCausal, kCross };

struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct FeedForwardParams {
  Tensor w1, b1, w2, b2;
};

struct LayerParams {
  Tensor ln_self_gain, ln_self_bias;
  AttentionParams self_attn;
  // Present only in decoder layers of encoder-decoder backbones.
  std::optional<Tensor> ln_cross_gain, ln_cross_bias;
  std::optional<AttentionParams> cross_attn;
  Tensor ln_ffn_gain, ln_ffn_bias;
  FeedForwardParams ffn;
};

struct StackParams {
  Tensor positions;  // [(max_seq_len + 1) x d_model]
  std::vector<LayerParams> layers;
  Tensor ln_final_gain, ln_final_bias;
};

using NamedTensor = std::pair<std::string, Tensor*>;

// Tape handles for every parameter of a stack, bound once per tape.
struct BoundAttention {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};
struct BoundLayer {
  Var ln_self_gain, ln_self_bias;
  BoundAttention self_attn;
  std::optional<Var> ln_cross_gain, ln_cross_bias;
  std::optional<BoundAttention> cross_attn;
  Var ln_ffn_gain, ln_ffn_bias;
  Var w1, b1, w2, b2;
};
struct BoundStack {
  Var positions;
  std::vector<BoundLayer> layers;
  Var ln_final_gain, ln_final_bias;
};
struct BoundBackbone {
  Var token_embeddings;
  std::optional<BoundStack> encoder, decoder;
};

// Transformer stack shared by the four variants. Pre-layer-norm blocks,
// learned absolute positions, ReLU feed-forward. The token embedding table is
// shared by the encoder, the decoder and the MLM head.
class Backbone {
 public:
  // Parameters drawn from normal(0, 0.02) with config.seed; biases zero, layer
  // norm gains one.
  explicit Backbone(const BackboneConfig& config);

  const BackboneConfig& config() const { return config_; }
  BackboneVariant variant() const { return config_.variant; }

  Tensor& token_embeddings() { return token_embeddings_; }
  const Tensor& token_embeddings() const { return token_embeddings_; }
  std::optional<StackParams>& encoder() { return encoder_; }
  std::optional<StackParams>& decoder() { return decoder_; }

  // Deterministic order; names are stable across runs and used in checkpoints.
  std::vector<NamedTensor> NamedParameters();
  std::size_t ParameterCount() const;

  BoundBackbone Bind(Tape& tape);

  // Hidden states per the variant's contract: n rows, or one row for
  // EncDecSingleToken. Validates the token sequence first.
  Var Encode(Tape& tape, const BoundBackbone& bound, std::span<const TermId> tokens) const;

  // Variant-specific entry points; each checks that the backbone matches.
  Var EncodeEncoderOnly(Tape& tape, const BoundBackbone& bound, std::span<const TermId> tokens) const;
  Var EncodeDecoderMultiTokens(Tape& tape, const BoundBackbone& bound,
                               std::span<const TermId> tokens) const;
  Var EncodeEncDecSingleToken(Tape& tape, const BoundBackbone& bound,
                              std::span<const TermId> tokens) const;
  Var EncodeEncDecMultiTokens(Tape& tape, const BoundBackbone& bound,
                              std::span<const TermId> tokens) const;

  // Convenience: run Encode on a private tape and return the hidden states.
  Tensor HiddenStates(std::span<const TermId> tokens);

 private:
  void CheckTokens(std::span<const TermId> tokens) const;
  void RequireVariant(BackboneVariant expected) const;
  Var RunStack(Tape& tape, const BoundStack& stack, Var embeddings, MaskSpec self_mask,
               std::optional<Var> memory) const;

  BackboneConfig config_;
  Tensor token_embeddings_;
  std::optional<StackParams> encoder_;
  std::optional<StackParams> decoder_;
};

// softmax(q·kᵀ/√d_head + mask)·v computed independently for each of
// num_heads column blocks, results concatenated. No projections.
Var ScaledDotProductAttention(Tape& tape, Var q, Var k, Var v, std::size_t num_heads,
                              MaskSpec mask);

// Multi-head attention: softmax(q·kᵀ/√d_head + mask)·v per head, heads
// concatenated and projected by wo. `queries` [a×d], `keys_values` [b×d].
Var MultiHeadAttention(Tape& tape, const BoundAttention& params, Var queries, Var keys_values,
                       std::size_t num_heads, MaskSpec mask);

// Additive mask of shape [a×b]: zeros, or kMaskValue above the diagonal.
std::optional<Tensor> MakeMask(MaskSpec spec, std::size_t a, std::size_t b);

}  // namespace lsr
