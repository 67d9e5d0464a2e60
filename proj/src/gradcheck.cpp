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

#include "lsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "lsr/backbone.hpp"
#include "lsr/model.hpp"
#include "lsr/random.hpp"
#include "lsr/tensor.hpp"
#include "lsr/training.hpp"

namespace lsr {
namespace {

constexpr double kKinkGap = 1e-3;
// Composite points closer than this to a ReLU or max kink are resampled.
constexpr double kCompositeKinkGap = 1e-4;

Tensor RandomTensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    do {
      v = rng.Uniform(lo, hi);
    } while (std::abs(v) < kKinkGap);
  }
  return t;
}

// Reduces any value to a scalar through a fixed random weighting so every
// output coordinate carries a distinct upstream gradient.
Var Project(Tape& tape, Var v, std::uint64_t seed) {
  Rng rng(seed);
  return tape.Dot(v, tape.Constant(RandomTensor(rng, tape.value(v).shape())));
}

using Case = std::function<double(Rng&, double eps, std::uint64_t seed)>;

// f(x) checked over a single input tensor.
Case Unary(Shape shape, std::function<Var(Tape&, Var)> op, double lo = -1.0, double hi = 1.0) {
  return [=](Rng& rng, double eps, std::uint64_t seed) {
    const Tensor x = RandomTensor(rng, shape, lo, hi);
    return FiniteDifferenceCheck([&](Tape& t, Var v) { return Project(t, op(t, v), seed); }, x, eps);
  };
}

// f(a, b) checked jointly over both inputs.
Case Binary(Shape sa, Shape sb, std::function<Var(Tape&, Var, Var)> op) {
  return [=](Rng& rng, double eps, std::uint64_t seed) {
    Tensor a = RandomTensor(rng, sa);
    Tensor b = RandomTensor(rng, sb);
    Tensor* params[] = {&a, &b};
    return FiniteDifferenceCheck(
        [&](Tape& t) { return Project(t, op(t, t.Parameter(a), t.Parameter(b)), seed); }, params,
        eps);
  };
}

std::vector<std::pair<std::string, Case>> OperationCases() {
  std::vector<std::pair<std::string, Case>> cases;
  cases.emplace_back("matmul", Binary({3, 4}, {4, 2}, [](Tape& t, Var a, Var b) { return t.MatMul(a, b); }));
  cases.emplace_back("matmul_transposed", Binary({3, 4}, {5, 4}, [](Tape& t, Var a, Var b) {
                       return t.MatMulTransposed(a, b);
                     }));
  cases.emplace_back("add", Binary({2, 3}, {2, 3}, [](Tape& t, Var a, Var b) { return t.Add(a, b); }));
  cases.emplace_back("sub", Binary({2, 3}, {2, 3}, [](Tape& t, Var a, Var b) { return t.Sub(a, b); }));
  cases.emplace_back("mul", Binary({2, 3}, {2, 3}, [](Tape& t, Var a, Var b) { return t.Mul(a, b); }));
  cases.emplace_back("add_row", Binary({3, 4}, {1, 4}, [](Tape& t, Var a, Var b) { return t.AddRow(a, b); }));
  cases.emplace_back("dot", Binary({2, 3}, {2, 3}, [](Tape& t, Var a, Var b) { return t.Dot(a, b); }));
  cases.emplace_back("scale", Unary({2, 3}, [](Tape& t, Var x) { return t.Scale(x, -1.7); }));
  cases.emplace_back("reshape", Unary({2, 3}, [](Tape& t, Var x) { return t.Reshape(x, {3, 2}); }));
  cases.emplace_back("relu", Unary({3, 4}, [](Tape& t, Var x) { return t.Relu(x); }));
  cases.emplace_back("log1p", Unary({3, 4}, [](Tape& t, Var x) { return t.Log1p(x); }, -0.5, 2.0));
  cases.emplace_back("square", Unary({3, 4}, [](Tape& t, Var x) { return t.Square(x); }));
  cases.emplace_back("sum", Unary({3, 4}, [](Tape& t, Var x) { return t.Sum(x); }));
  cases.emplace_back("mean", Unary({3, 4}, [](Tape& t, Var x) { return t.Mean(x); }));
  cases.emplace_back("sum_over_axis", Unary({3, 4}, [](Tape& t, Var x) { return t.SumOverAxis(x, 0); }));
  cases.emplace_back("max_over_axis", Unary({4, 5}, [](Tape& t, Var x) { return t.MaxOverAxis(x, 0).values; }));
  cases.emplace_back("softmax_rows", Unary({3, 4}, [](Tape& t, Var x) { return t.SoftmaxRows(x); }, -3.0, 3.0));
  cases.emplace_back("softmax_rows_causal", Unary({4, 4}, [](Tape& t, Var x) {
                       return t.SoftmaxRows(x, MakeMask(MaskSpec::kCausal, 4, 4));
                     }, -3.0, 3.0));
  cases.emplace_back("embedding_lookup", Unary({5, 3}, [](Tape& t, Var x) {
                       const TermId ids[] = {1, 4, 1, 0};
                       return t.EmbeddingLookup(x, ids);
                     }));
  cases.emplace_back("layer_norm", [](Rng& rng, double eps, std::uint64_t seed) {
    Tensor x = RandomTensor(rng, {3, 5}, -2.0, 2.0);
    Tensor g = RandomTensor(rng, {1, 5}, 0.5, 1.5);
    Tensor b = RandomTensor(rng, {1, 5});
    Tensor* params[] = {&x, &g, &b};
    return FiniteDifferenceCheck(
        [&](Tape& t) {
          return Project(t, t.LayerNorm(t.Parameter(x), t.Parameter(g), t.Parameter(b)), seed);
        },
        params, eps);
  });
  cases.emplace_back("slice_cols", Unary({3, 5}, [](Tape& t, Var x) { return t.SliceCols(x, 1, 3); }));
  cases.emplace_back("slice_rows", Unary({4, 3}, [](Tape& t, Var x) { return t.SliceRows(x, 1, 2); }));
  cases.emplace_back("concat_cols", Binary({3, 2}, {3, 4}, [](Tape& t, Var a, Var b) {
                       const Var parts[] = {a, b, a};
                       return t.ConcatCols(parts);
                     }));
  cases.emplace_back("concat_rows", Binary({2, 3}, {1, 3}, [](Tape& t, Var a, Var b) {
                       const Var parts[] = {b, a};
                       return t.ConcatRows(parts);
                     }));
  cases.emplace_back("scatter_add", Unary({4, 1}, [](Tape& t, Var x) {
                       const TermId ids[] = {3, 0, 3, 5};
                       return t.ScatterAdd(x, ids, 6);
                     }));
  cases.emplace_back("log1p_relu_sum", Unary({6}, [](Tape& t, Var x) {
                       return t.Sum(t.Log1p(t.Relu(x)));
                     }, 0.0, 2.0));
  cases.emplace_back("attention", [](Rng& rng, double eps, std::uint64_t seed) {
    Tensor q = RandomTensor(rng, {3, 4}), k = RandomTensor(rng, {3, 4}), v = RandomTensor(rng, {3, 4});
    Tensor* params[] = {&q, &k, &v};
    return FiniteDifferenceCheck(
        [&](Tape& t) {
          return Project(t, ScaledDotProductAttention(t, t.Parameter(q), t.Parameter(k),
                                                      t.Parameter(v), 2, MaskSpec::kCausal),
                         seed);
        },
        params, eps);
  });
  return cases;
}

struct Pairing {
  BackboneVariant variant;
  HeadKind head;
};

std::vector<Pairing> Pairings() {
  return {{BackboneVariant::kEncoderOnly, HeadKind::kMlp},
          {BackboneVariant::kEncoderOnly, HeadKind::kMlmMultiTokens},
          {BackboneVariant::kDecoderMultiTokens, HeadKind::kMlp},
          {BackboneVariant::kDecoderMultiTokens, HeadKind::kMlmMultiTokens},
          {BackboneVariant::kEncDecSingleToken, HeadKind::kMlmSingleToken},
          {BackboneVariant::kEncDecMultiTokens, HeadKind::kMlp},
          {BackboneVariant::kEncDecMultiTokens, HeadKind::kMlmMultiTokens}};
}

TokenIds RandomTokens(Rng& rng, std::size_t vocab, std::size_t max_len) {
  TokenIds ids(1 + rng.Below(max_len));
  for (auto& id : ids) id = static_cast<TermId>(3 + rng.Below(vocab - 3));
  return ids;
}

// Loss of one training step (margin MSE plus both FLOPs terms) at a random
// parameter point, checked over every model parameter.
double CompositeCheck(const Pairing& pairing, Rng& rng, double eps) {
  ModelConfig config;
  config.backbone = {pairing.variant, 2, 4, 2, 8, 10, 5, rng.NextU64()};
  config.head = pairing.head;
  SparseEncoder model(config);
  const auto named = model.NamedParameters();
  std::vector<Tensor*> params;
  for (const auto& [name, tensor] : named) params.push_back(tensor);
  std::vector<TrainingTriplet> batch(2);
  auto sample = [&] {
    for (const auto& [name, tensor] : named) {
      const bool gain = name.find(".gain") != std::string::npos;
      for (double& v : tensor->data()) v = (gain ? 1.0 : 0.0) + rng.Normal(0.0, 0.3);
    }
    for (auto& t : batch) {
      t.query_tokens = RandomTokens(rng, 10, 3);
      t.pos_tokens = RandomTokens(rng, 10, 5);
      t.neg_tokens = RandomTokens(rng, 10, 5);
      t.teacher_pos = rng.Uniform(0.0, 2.0);
      t.teacher_neg = rng.Uniform(0.0, 2.0);
    }
  };
  auto loss = [&](Tape& tape) {
    const auto bound = model.Bind(tape);
    std::vector<Var> margins, queries, docs;
    std::vector<double> teacher;
    for (const auto& t : batch) {
      Var q = model.EncodeDense(tape, bound, t.query_tokens);
      Var p = model.EncodeDense(tape, bound, t.pos_tokens);
      Var n = model.EncodeDense(tape, bound, t.neg_tokens);
      margins.push_back(tape.Sub(tape.Dot(q, p), tape.Dot(q, n)));
      teacher.push_back(t.teacher_pos - t.teacher_neg);
      queries.push_back(q);
      docs.push_back(p);
      docs.push_back(n);
    }
    Var reg = tape.Add(tape.Scale(FlopsRegularizer(tape, queries), 0.1),
                       tape.Scale(FlopsRegularizer(tape, docs), 0.1));
    return tape.Add(MarginMse(tape, margins, teacher), reg);
  };
  for (;;) {
    sample();
    Tape probe;
    loss(probe);
    if (probe.kink_margin() >= kCompositeKinkGap) break;
  }
  return FiniteDifferenceCheck(loss, params, eps);
}

}  // namespace

std::vector<GradCheckResult> RunGradientSuite(const GradCheckOptions& options) {
  std::vector<GradCheckResult> results;
  std::uint64_t case_index = 0;
  for (const auto& [name, check] : OperationCases()) {
    GradCheckResult r{name, 0.0, false};
    for (std::size_t p = 0; p < options.points; ++p) {
      const std::uint64_t seed = options.seed * 1000003ULL + case_index * 101ULL + p;
      Rng rng(seed);
      r.max_error = std::max(r.max_error, check(rng, options.eps, seed ^ 0x5bd1e995ULL));
    }
    r.passed = r.max_error < options.tolerance;
    results.push_back(std::move(r));
    ++case_index;
  }
  if (options.composite) {
    for (const auto& pairing : Pairings()) {
      GradCheckResult r{"composite:" + std::string(ToString(pairing.variant)) + "+" +
                            std::string(ToString(pairing.head)),
                        0.0, false};
      for (std::size_t p = 0; p < options.points; ++p) {
        Rng rng(options.seed * 1000003ULL + case_index * 101ULL + p);
        r.max_error = std::max(r.max_error, CompositeCheck(pairing, rng, options.eps));
      }
      r.passed = r.max_error < options.tolerance;
      results.push_back(std::move(r));
      ++case_index;
    }
  }
  return results;
}

}  // namespace lsr
