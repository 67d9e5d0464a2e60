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

#include "lsr/backbone.hpp"

#include <cmath>

#include "lsr/error.hpp"
#include "lsr/random.hpp"
#include "lsr/text.hpp"

namespace lsr {
namespace {

constexpr double kInitStd = 0.02;

Tensor NormalMatrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t({rows, cols}, true);
  for (double& v : t.data()) v = rng.Normal(0.0, kInitStd);
  return t;
}

Tensor Zeros(std::size_t cols) { return Tensor({1, cols}, true); }

Tensor Ones(std::size_t cols) {
  Tensor t({1, cols}, true);
  for (double& v : t.data()) v = 1.0;
  return t;
}

AttentionParams MakeAttention(Rng& rng, std::size_t d) {
  return {NormalMatrix(rng, d, d), Zeros(d), NormalMatrix(rng, d, d), Zeros(d),
          NormalMatrix(rng, d, d), Zeros(d), NormalMatrix(rng, d, d), Zeros(d)};
}

StackParams MakeStack(Rng& rng, const BackboneConfig& c, bool cross) {
  StackParams s;
  s.positions = NormalMatrix(rng, c.max_seq_len + 1, c.d_model);
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    LayerParams layer;
    layer.ln_self_gain = Ones(c.d_model);
    layer.ln_self_bias = Zeros(c.d_model);
    layer.self_attn = MakeAttention(rng, c.d_model);
    if (cross) {
      layer.ln_cross_gain = Ones(c.d_model);
      layer.ln_cross_bias = Zeros(c.d_model);
      layer.cross_attn = MakeAttention(rng, c.d_model);
    }
    layer.ln_ffn_gain = Ones(c.d_model);
    layer.ln_ffn_bias = Zeros(c.d_model);
    layer.ffn = {NormalMatrix(rng, c.d_model, c.ffn_width()), Zeros(c.ffn_width()),
                 NormalMatrix(rng, c.ffn_width(), c.d_model), Zeros(c.d_model)};
    s.layers.push_back(std::move(layer));
  }
  s.ln_final_gain = Ones(c.d_model);
  s.ln_final_bias = Zeros(c.d_model);
  return s;
}

void AppendAttention(std::vector<NamedTensor>& out, const std::string& prefix, AttentionParams& a) {
  out.emplace_back(prefix + ".wq", &a.wq);
  out.emplace_back(prefix + ".bq", &a.bq);
  out.emplace_back(prefix + ".wk", &a.wk);
  out.emplace_back(prefix + ".bk", &a.bk);
  out.emplace_back(prefix + ".wv", &a.wv);
  out.emplace_back(prefix + ".bv", &a.bv);
  out.emplace_back(prefix + ".wo", &a.wo);
  out.emplace_back(prefix + ".bo", &a.bo);
}

void AppendStack(std::vector<NamedTensor>& out, const std::string& prefix, StackParams& s) {
  out.emplace_back(prefix + ".positions", &s.positions);
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    auto& layer = s.layers[l];
    const std::string p = prefix + ".layers." + std::to_string(l);
    out.emplace_back(p + ".ln_self.gain", &layer.ln_self_gain);
    out.emplace_back(p + ".ln_self.bias", &layer.ln_self_bias);
    AppendAttention(out, p + ".self_attn", layer.self_attn);
    if (layer.cross_attn) {
      out.emplace_back(p + ".ln_cross.gain", &*layer.ln_cross_gain);
      out.emplace_back(p + ".ln_cross.bias", &*layer.ln_cross_bias);
      AppendAttention(out, p + ".cross_attn", *layer.cross_attn);
    }
    out.emplace_back(p + ".ln_ffn.gain", &layer.ln_ffn_gain);
    out.emplace_back(p + ".ln_ffn.bias", &layer.ln_ffn_bias);
    out.emplace_back(p + ".ffn.w1", &layer.ffn.w1);
    out.emplace_back(p + ".ffn.b1", &layer.ffn.b1);
    out.emplace_back(p + ".ffn.w2", &layer.ffn.w2);
    out.emplace_back(p + ".ffn.b2", &layer.ffn.b2);
  }
  out.emplace_back(prefix + ".ln_final.gain", &s.ln_final_gain);
  out.emplace_back(prefix + ".ln_final.bias", &s.ln_final_bias);
}

BoundAttention BindAttention(Tape& tape, AttentionParams& a) {
  return {tape.Parameter(a.wq), tape.Parameter(a.bq), tape.Parameter(a.wk), tape.Parameter(a.bk),
          tape.Parameter(a.wv), tape.Parameter(a.bv), tape.Parameter(a.wo), tape.Parameter(a.bo)};
}

BoundStack BindStack(Tape& tape, StackParams& s) {
  BoundStack b;
  b.positions = tape.Parameter(s.positions);
  for (auto& layer : s.layers) {
    BoundLayer bl;
    bl.ln_self_gain = tape.Parameter(layer.ln_self_gain);
    bl.ln_self_bias = tape.Parameter(layer.ln_self_bias);
    bl.self_attn = BindAttention(tape, layer.self_attn);
    if (layer.cross_attn) {
      bl.ln_cross_gain = tape.Parameter(*layer.ln_cross_gain);
      bl.ln_cross_bias = tape.Parameter(*layer.ln_cross_bias);
      bl.cross_attn = BindAttention(tape, *layer.cross_attn);
    }
    bl.ln_ffn_gain = tape.Parameter(layer.ln_ffn_gain);
    bl.ln_ffn_bias = tape.Parameter(layer.ln_ffn_bias);
    bl.w1 = tape.Parameter(layer.ffn.w1);
    bl.b1 = tape.Parameter(layer.ffn.b1);
    bl.w2 = tape.Parameter(layer.ffn.w2);
    bl.b2 = tape.Parameter(layer.ffn.b2);
    b.layers.push_back(std::move(bl));
  }
  b.ln_final_gain = tape.Parameter(s.ln_final_gain);
  b.ln_final_bias = tape.Parameter(s.ln_final_bias);
  return b;
}

bool HasEncoder(BackboneVariant v) {
  return v == BackboneVariant::kEncoderOnly || v == BackboneVariant::kEncDecSingleToken ||
         v == BackboneVariant::kEncDecMultiTokens;
}

bool HasDecoder(BackboneVariant v) { return v != BackboneVariant::kEncoderOnly; }

bool HasCross(BackboneVariant v) {
  return v == BackboneVariant::kEncDecSingleToken || v == BackboneVariant::kEncDecMultiTokens;
}

}  // namespace

std::string_view ToString(BackboneVariant variant) {
  switch (variant) {
    case BackboneVariant::kEncoderOnly: return "EncoderOnly";
    case BackboneVariant::kDecoderMultiTokens: return "DecoderMultiTokens";
    case BackboneVariant::kEncDecSingleToken: return "EncDecSingleToken";
    case BackboneVariant::kEncDecMultiTokens: return "EncDecMultiTokens";
  }
  return "unknown";
}

BackboneVariant ParseBackboneVariant(std::string_view name) {
  for (auto v : {BackboneVariant::kEncoderOnly, BackboneVariant::kDecoderMultiTokens,
                 BackboneVariant::kEncDecSingleToken, BackboneVariant::kEncDecMultiTokens}) {
    if (ToString(v) == name) return v;
  }
  Fail(ErrorKind::kUsage, "unknown backbone variant '" + std::string(name) +
                              "' (expected EncoderOnly, DecoderMultiTokens, EncDecSingleToken "
                              "or EncDecMultiTokens)");
}

void BackboneConfig::Validate() const {
  Require(num_layers >= 1, ErrorKind::kInput, "num_layers must be >= 1");
  Require(d_model >= 1 && num_heads >= 1, ErrorKind::kInput, "d_model and num_heads must be >= 1");
  Require(d_model % num_heads == 0, ErrorKind::kInput,
          "d_model " + std::to_string(d_model) + " is not divisible by num_heads " +
              std::to_string(num_heads));
  Require(vocab_size >= kReservedIds + 1, ErrorKind::kInput,
          "vocab_size must be >= " + std::to_string(kReservedIds + 1));
  Require(max_seq_len >= 1, ErrorKind::kInput, "max_seq_len must be >= 1");
}

// ---------------------------------------------------------------- attention

std::optional<Tensor> MakeMask(MaskSpec spec, std::size_t a, std::size_t b) {
  if (spec != MaskSpec::kCausal) return std::nullopt;
  Tensor mask({a, b});
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) mask.at(i, j) = kMaskValue;
  }
  return mask;
}

Var ScaledDotProductAttention(Tape& tape, Var q, Var k, Var v, std::size_t num_heads,
                              MaskSpec mask) {
  const Tensor& qt = tape.value(q);
  const Tensor& kt = tape.value(k);
  const Tensor& vt = tape.value(v);
  Require(qt.rank() == 2 && kt.rank() == 2 && vt.rank() == 2, ErrorKind::kDimension,
          "attention expects matrices");
  const std::size_t d = qt.cols();
  Require(kt.cols() == d && vt.cols() == d, ErrorKind::kDimension,
          "attention: q, k, v widths differ: " + ShapeToString(qt.shape()) + ", " +
              ShapeToString(kt.shape()) + ", " + ShapeToString(vt.shape()));
  Require(kt.rows() == vt.rows(), ErrorKind::kDimension, "attention: key/value lengths differ");
  Require(num_heads >= 1 && d % num_heads == 0, ErrorKind::kDimension,
          "attention: width " + std::to_string(d) + " not divisible into " +
              std::to_string(num_heads) + " heads");
  const std::size_t dh = d / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto additive = MakeMask(mask, qt.rows(), kt.rows());
  std::vector<Var> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    Var qh = num_heads == 1 ? q : tape.SliceCols(q, h * dh, dh);
    Var kh = num_heads == 1 ? k : tape.SliceCols(k, h * dh, dh);
    Var vh = num_heads == 1 ? v : tape.SliceCols(v, h * dh, dh);
    Var scores = tape.Scale(tape.MatMulTransposed(qh, kh), scale);
    Var weights = tape.SoftmaxRows(scores, additive);
    heads.push_back(tape.MatMul(weights, vh));
  }
  return num_heads == 1 ? heads[0] : tape.ConcatCols(heads);
}

Var MultiHeadAttention(Tape& tape, const BoundAttention& p, Var queries, Var keys_values,
                       std::size_t num_heads, MaskSpec mask) {
  Var q = tape.AddRow(tape.MatMul(queries, p.wq), p.bq);
  Var k = tape.AddRow(tape.MatMul(keys_values, p.wk), p.bk);
  Var v = tape.AddRow(tape.MatMul(keys_values, p.wv), p.bv);
  Var mixed = ScaledDotProductAttention(tape, q, k, v, num_heads, mask);
  return tape.AddRow(tape.MatMul(mixed, p.wo), p.bo);
}

// ---------------------------------------------------------------- backbone

Backbone::Backbone(const BackboneConfig& config) : config_(config) {
  config_.Validate();
  Rng rng(config_.seed);
  token_embeddings_ = NormalMatrix(rng, config_.vocab_size, config_.d_model);
  if (HasEncoder(config_.variant)) encoder_ = MakeStack(rng, config_, false);
  if (HasDecoder(config_.variant)) decoder_ = MakeStack(rng, config_, HasCross(config_.variant));
}

std::vector<NamedTensor> Backbone::NamedParameters() {
  std::vector<NamedTensor> out;
  out.emplace_back("token_embeddings", &token_embeddings_);
  if (encoder_) AppendStack(out, "encoder", *encoder_);
  if (decoder_) AppendStack(out, "decoder", *decoder_);
  return out;
}

std::size_t Backbone::ParameterCount() const {
  std::size_t total = 0;
  for (const auto& [name, t] : const_cast<Backbone*>(this)->NamedParameters()) total += t->size();
  return total;
}

BoundBackbone Backbone::Bind(Tape& tape) {
  BoundBackbone b;
  b.token_embeddings = tape.Parameter(token_embeddings_);
  if (encoder_) b.encoder = BindStack(tape, *encoder_);
  if (decoder_) b.decoder = BindStack(tape, *decoder_);
  return b;
}

void Backbone::CheckTokens(std::span<const TermId> tokens) const {
  Require(!tokens.empty(), ErrorKind::kEmptyInput, "cannot encode an empty token sequence");
  Require(tokens.size() <= config_.max_seq_len, ErrorKind::kLength,
          "sequence of " + std::to_string(tokens.size()) + " tokens exceeds max_seq_len " +
              std::to_string(config_.max_seq_len));
  for (TermId t : tokens) {
    Require(t < config_.vocab_size, ErrorKind::kVocabulary,
            "token id " + std::to_string(t) + " outside vocabulary of " +
                std::to_string(config_.vocab_size));
  }
}

void Backbone::RequireVariant(BackboneVariant expected) const {
  Require(config_.variant == expected, ErrorKind::kContract,
          std::string("backbone is ") + std::string(ToString(config_.variant)) + ", not " +
              std::string(ToString(expected)));
}

Var Backbone::RunStack(Tape& tape, const BoundStack& stack, Var embeddings, MaskSpec self_mask,
                       std::optional<Var> memory) const {
  const std::size_t n = tape.value(embeddings).rows();
  Var x = tape.Add(embeddings, tape.SliceRows(stack.positions, 0, n));
  for (const auto& layer : stack.layers) {
    Var normed = tape.LayerNorm(x, layer.ln_self_gain, layer.ln_self_bias);
    x = tape.Add(x, MultiHeadAttention(tape, layer.self_attn, normed, normed, config_.num_heads,
                                       self_mask));
    if (layer.cross_attn && memory) {
      Var cn = tape.LayerNorm(x, *layer.ln_cross_gain, *layer.ln_cross_bias);
      x = tape.Add(x, MultiHeadAttention(tape, *layer.cross_attn, cn, *memory, config_.num_heads,
                                         MaskSpec::kCross));
    }
    Var fn = tape.LayerNorm(x, layer.ln_ffn_gain, layer.ln_ffn_bias);
    Var hidden = tape.Relu(tape.AddRow(tape.MatMul(fn, layer.w1), layer.b1));
    x = tape.Add(x, tape.AddRow(tape.MatMul(hidden, layer.w2), layer.b2));
  }
  return tape.LayerNorm(x, stack.ln_final_gain, stack.ln_final_bias);
}

Var Backbone::Encode(Tape& tape, const BoundBackbone& bound, std::span<const TermId> tokens) const {
  switch (config_.variant) {
    case BackboneVariant::kEncoderOnly: return EncodeEncoderOnly(tape, bound, tokens);
    case BackboneVariant::kDecoderMultiTokens: return EncodeDecoderMultiTokens(tape, bound, tokens);
    case BackboneVariant::kEncDecSingleToken: return EncodeEncDecSingleToken(tape, bound, tokens);
    case BackboneVariant::kEncDecMultiTokens: return EncodeEncDecMultiTokens(tape, bound, tokens);
  }
  Fail(ErrorKind::kContract, "unknown backbone variant");
}

Var Backbone::EncodeEncoderOnly(Tape& tape, const BoundBackbone& bound,
                                std::span<const TermId> tokens) const {
  RequireVariant(BackboneVariant::kEncoderOnly);
  CheckTokens(tokens);
  Var emb = tape.EmbeddingLookup(bound.token_embeddings, tokens);
  return RunStack(tape, *bound.encoder, emb, MaskSpec::kBidirectional, std::nullopt);
}

namespace {

TokenIds WithStart(std::span<const TermId> tokens) {
  TokenIds ids;
  ids.reserve(tokens.size() + 1);
  ids.push_back(kStartId);
  ids.insert(ids.end(), tokens.begin(), tokens.end());
  return ids;
}

}  // namespace

Var Backbone::EncodeDecoderMultiTokens(Tape& tape, const BoundBackbone& bound,
                                       std::span<const TermId> tokens) const {
  RequireVariant(BackboneVariant::kDecoderMultiTokens);
  CheckTokens(tokens);
  const TokenIds input = WithStart(tokens);
  Var emb = tape.EmbeddingLookup(bound.token_embeddings, input);
  Var states = RunStack(tape, *bound.decoder, emb, MaskSpec::kCausal, std::nullopt);
  // Drop the <s> state so row j aligns with token t_j.
  return tape.SliceRows(states, 1, tokens.size());
}

Var Backbone::EncodeEncDecSingleToken(Tape& tape, const BoundBackbone& bound,
                                      std::span<const TermId> tokens) const {
  RequireVariant(BackboneVariant::kEncDecSingleToken);
  CheckTokens(tokens);
  Var memory = RunStack(tape, *bound.encoder, tape.EmbeddingLookup(bound.token_embeddings, tokens),
                        MaskSpec::kBidirectional, std::nullopt);
  const TermId start[] = {kStartId};
  Var emb = tape.EmbeddingLookup(bound.token_embeddings, start);
  return RunStack(tape, *bound.decoder, emb, MaskSpec::kCausal, memory);
}

Var Backbone::EncodeEncDecMultiTokens(Tape& tape, const BoundBackbone& bound,
                                      std::span<const TermId> tokens) const {
  RequireVariant(BackboneVariant::kEncDecMultiTokens);
  CheckTokens(tokens);
  Var memory = RunStack(tape, *bound.encoder, tape.EmbeddingLookup(bound.token_embeddings, tokens),
                        MaskSpec::kBidirectional, std::nullopt);
  const TokenIds input = WithStart(tokens);
  Var emb = tape.EmbeddingLookup(bound.token_embeddings, input);
  Var states = RunStack(tape, *bound.decoder, emb, MaskSpec::kCausal, memory);
  return tape.SliceRows(states, 1, tokens.size());
}

Tensor Backbone::HiddenStates(std::span<const TermId> tokens) {
  Tape tape;
  BoundBackbone bound = Bind(tape);
  return tape.value(Encode(tape, bound, tokens));
}

}  // namespace lsr
