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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lsr/backbone.hpp"
#include "lsr/heads.hpp"
#include "lsr/sparse_vector.hpp"

namespace lsr {

struct ModelConfig {
  BackboneConfig backbone;
  HeadKind head = HeadKind::kMlmMultiTokens;
  Pooling pooling = Pooling::kMax;
};

// Backbone plus sparse head. Queries and documents share every weight.
class SparseEncoder {
 public:
  struct Bound {
    BoundBackbone backbone;
    BoundHead head;
  };

  // Raises an input error for backbone/head pairings that cannot work: the
  // single-token head needs the single-state backbone, and the MLP head needs
  // token-aligned states.
  explicit SparseEncoder(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  Backbone& backbone() { return backbone_; }
  const Backbone& backbone() const { return backbone_; }
  Head& head() { return head_; }
  const Head& head() const { return head_; }
  std::size_t vocab_size() const { return config_.backbone.vocab_size; }

  // Digest of the vocabulary the model was trained against; 0 when unset.
  std::uint64_t vocab_digest() const { return vocab_digest_; }
  void set_vocab_digest(std::uint64_t digest) { vocab_digest_ = digest; }

  std::vector<NamedTensor> NamedParameters();
  Bound Bind(Tape& tape);

  // Dense pre-sparsification activations [1×|V|].
  Var EncodeDense(Tape& tape, const Bound& bound, std::span<const TermId> tokens) const;
  SparseVector Encode(std::span<const TermId> tokens);
  std::vector<SparseVector> EncodeAll(std::span<const TokenIds> sequences);

  // Binary checkpoint: config, vocabulary digest and every parameter array
  // with its shape. Load(Save(m)) reproduces m bit for bit.
  void Save(const std::filesystem::path& path) const;
  static SparseEncoder Load(const std::filesystem::path& path);

  friend bool operator==(const SparseEncoder& a, const SparseEncoder& b);

 private:
  ModelConfig config_;
  Backbone backbone_;
  Head head_;
  std::uint64_t vocab_digest_ = 0;
};

// FNV-1a 64 over a file's bytes.
std::uint64_t FileDigest(const std::filesystem::path& path);
std::string DigestHex(std::uint64_t digest);

}  // namespace lsr
