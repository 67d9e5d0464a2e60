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

#include "lsr/model.hpp"

#include <bit>
#include <cstdio>

#include "json.hpp"

#include "binary_io.hpp"
#include "lsr/error.hpp"

namespace lsr {
namespace {

constexpr char kCheckpointMagic[4] = {'L', 'S', 'R', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint and index files are written in native little-endian order");

using io::Put;
using io::Reader;
using io::ReadFile;

nlohmann::json ConfigToJson(const ModelConfig& c, std::uint64_t digest) {
  const auto& b = c.backbone;
  return {{"backbone",
           {{"variant", ToString(b.variant)},
            {"num_layers", b.num_layers},
            {"d_model", b.d_model},
            {"num_heads", b.num_heads},
            {"d_ff", b.ffn_width()},
            {"vocab_size", b.vocab_size},
            {"max_seq_len", b.max_seq_len},
            {"seed", b.seed}}},
          {"head", {{"kind", ToString(c.head)}, {"pooling", c.pooling == Pooling::kMax ? "max" : "sum"}}},
          {"vocab_digest", DigestHex(digest)}};
}

ModelConfig ConfigFromJson(const nlohmann::json& j) {
  ModelConfig c;
  const auto& b = j.at("backbone");
  c.backbone.variant = ParseBackboneVariant(b.at("variant").get<std::string>());
  c.backbone.num_layers = b.at("num_layers").get<std::size_t>();
  c.backbone.d_model = b.at("d_model").get<std::size_t>();
  c.backbone.num_heads = b.at("num_heads").get<std::size_t>();
  c.backbone.d_ff = b.at("d_ff").get<std::size_t>();
  c.backbone.vocab_size = b.at("vocab_size").get<std::size_t>();
  c.backbone.max_seq_len = b.at("max_seq_len").get<std::size_t>();
  c.backbone.seed = b.at("seed").get<std::uint64_t>();
  c.head = ParseHeadKind(j.at("head").at("kind").get<std::string>());
  c.pooling = j.at("head").at("pooling").get<std::string>() == "sum" ? Pooling::kSum : Pooling::kMax;
  return c;
}

}  // namespace

SparseEncoder::SparseEncoder(const ModelConfig& config)
    : config_(config),
      backbone_(config.backbone),
      head_(config.head, config.backbone.d_model, config.backbone.vocab_size,
            config.backbone.seed ^ 0x9E3779B97F4A7C15ULL, config.pooling) {
  const bool single_state = config.backbone.variant == BackboneVariant::kEncDecSingleToken;
  Require(!(config.head == HeadKind::kMlmSingleToken && !single_state), ErrorKind::kInput,
          "MLM_SingleToken head requires the EncDecSingleToken backbone");
  Require(!(config.head == HeadKind::kMlp && single_state), ErrorKind::kInput,
          "MLP head needs token-aligned hidden states; EncDecSingleToken yields one state");
}

std::vector<NamedTensor> SparseEncoder::NamedParameters() {
  auto params = backbone_.NamedParameters();
  for (auto& p : head_.NamedParameters()) params.push_back(std::move(p));
  return params;
}

SparseEncoder::Bound SparseEncoder::Bind(Tape& tape) {
  return {backbone_.Bind(tape), head_.Bind(tape)};
}

Var SparseEncoder::EncodeDense(Tape& tape, const Bound& bound,
                               std::span<const TermId> tokens) const {
  Var hidden = backbone_.Encode(tape, bound.backbone, tokens);
  return head_.Apply(tape, bound.head, hidden, tokens, bound.backbone.token_embeddings);
}

SparseVector SparseEncoder::Encode(std::span<const TermId> tokens) {
  Tape tape;
  Bound bound = Bind(tape);
  return SparseVector::FromDense(tape.value(EncodeDense(tape, bound, tokens)).data());
}

std::vector<SparseVector> SparseEncoder::EncodeAll(std::span<const TokenIds> sequences) {
  std::vector<SparseVector> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(Encode(s));
  return out;
}

void SparseEncoder::Save(const std::filesystem::path& path) const {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  Put<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = ConfigToJson(config_, vocab_digest_).dump();
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  auto params = const_cast<SparseEncoder*>(this)->NamedParameters();
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor->rank()));
    for (std::size_t d : tensor->shape()) Put<std::uint64_t>(out, d);
    for (double v : tensor->data()) Put<double>(out, v);
  }
  io::WriteFile(path, out);
}

SparseEncoder SparseEncoder::Load(const std::filesystem::path& path) {
  Reader r(ReadFile(path), path.string());
  if (r.GetBytes(4, "magic") != std::string(kCheckpointMagic, 4)) r.Corrupt("bad checkpoint magic");
  const auto version = r.Get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    r.Corrupt("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = r.Get<std::uint32_t>("header length");
  const std::string header = r.GetBytes(header_len, "header");
  ModelConfig config;
  std::uint64_t digest = 0;
  try {
    const auto j = nlohmann::json::parse(header);
    config = ConfigFromJson(j);
    digest = std::stoull(j.at("vocab_digest").get<std::string>(), nullptr, 16);
  } catch (const nlohmann::json::exception& e) {
    r.Corrupt(std::string("bad checkpoint header: ") + e.what());
  } catch (const Error& e) {
    r.Corrupt(std::string("bad checkpoint header: ") + e.what());
  }
  SparseEncoder model(config);
  model.set_vocab_digest(digest);
  auto params = model.NamedParameters();
  const auto count = r.Get<std::uint32_t>("array count");
  if (count != params.size()) {
    r.Corrupt("expected " + std::to_string(params.size()) + " arrays, found " + std::to_string(count));
  }
  for (auto& [name, tensor] : params) {
    const auto name_len = r.Get<std::uint32_t>("array name length");
    const std::string stored = r.GetBytes(name_len, "array name");
    if (stored != name) r.Corrupt("expected array '" + name + "', found '" + stored + "'");
    const auto rank = r.Get<std::uint32_t>("rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.Get<std::uint64_t>("dimension"));
    if (shape != tensor->shape()) {
      r.Corrupt("array '" + name + "' has shape " + ShapeToString(shape) + ", expected " +
                ShapeToString(tensor->shape()));
    }
    for (double& v : tensor->data()) v = r.Get<double>("array data");
  }
  if (!r.done()) r.Corrupt("trailing bytes after checkpoint");
  return model;
}

bool operator==(const SparseEncoder& a, const SparseEncoder& b) {
  if (!(a.config_.backbone == b.config_.backbone) || a.config_.head != b.config_.head ||
      a.config_.pooling != b.config_.pooling || a.vocab_digest_ != b.vocab_digest_) {
    return false;
  }
  auto pa = const_cast<SparseEncoder&>(a).NamedParameters();
  auto pb = const_cast<SparseEncoder&>(b).NamedParameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || !(*pa[i].second == *pb[i].second)) return false;
  }
  return true;
}

std::uint64_t FileDigest(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string DigestHex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace lsr
