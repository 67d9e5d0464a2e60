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

#include <cmath>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "lsr/tensor.hpp"
#include "test_util.hpp"

namespace lsr {
namespace {

using testing::KindOf;
using testing::RandomTensor;

// Central differences of a forward-only scalar function; independent of any
// backward rule.
std::vector<double> NumericGrad(const std::function<double(const Tensor&)>& f, Tensor x,
                                double eps = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

std::vector<double> Values(std::span<const double> s) { return {s.begin(), s.end()}; }

TEST_SUITE("tensor_core") {
  TEST_CASE("matmul fixtures") {
    Tape t;
    Var a = t.Constant(Tensor::Matrix({{1, 2}, {3, 4}}));
    Var id = t.Constant(Tensor::Matrix({{1, 0}, {0, 1}}));
    CHECK(t.value(t.MatMul(a, id)) == Tensor::Matrix({{1, 2}, {3, 4}}));
    Var r = t.MatMul(t.Constant(Tensor::Matrix({{1, 2}})), t.Constant(Tensor::Matrix({{3}, {4}})));
    CHECK(t.value(r) == Tensor::Matrix({{11}}));
  }

  TEST_CASE("matmul shape mismatch names both shapes") {
    Tape t;
    Var a = t.Constant(Tensor({2, 3}));
    Var b = t.Constant(Tensor({2, 3}));
    try {
      t.MatMul(a, b);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDimension);
      CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
    }
  }

  TEST_CASE("matmul gradient matches finite differences") {
    Tensor a = Tensor::Matrix({{1, 1}});
    a.set_requires_grad(true);
    const Tensor b = Tensor::Matrix({{2}, {5}});
    Tape t;
    t.Backward(t.Sum(t.MatMul(t.Parameter(a), t.Constant(b))));
    const auto numeric = NumericGrad(
        [&](const Tensor& x) {
          Tape f;
          return f.value(f.Sum(f.MatMul(f.Constant(x), f.Constant(b)))).item();
        },
        a);
    REQUIRE(a.grad().size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(a.grad()[i] == doctest::Approx(numeric[i]).epsilon(1e-8));
    CHECK(Values(a.grad()) == std::vector<double>{2, 5});
  }

  TEST_CASE("relu fixtures and subgradient") {
    Tape t;
    Var x = t.Constant(Tensor::Vector({-1, 0, 2}));
    CHECK(t.value(t.Relu(x)) == Tensor::Vector({0, 0, 2}));

    Tensor neg = Tensor::Vector({-1, -2, -0.5});
    neg.set_requires_grad(true);
    Tape u;
    Var r = u.Relu(u.Parameter(neg));
    CHECK(u.value(r) == Tensor::Vector({0, 0, 0}));
    u.Backward(u.Sum(r));
    CHECK(Values(neg.grad()) == std::vector<double>{0, 0, 0});

    Tensor at_zero = Tensor::Vector({0.0});
    at_zero.set_requires_grad(true);
    Tape z;
    z.Backward(z.Sum(z.Relu(z.Parameter(at_zero))));
    CHECK(at_zero.grad()[0] == 0.0);
  }

  TEST_CASE("relu gradient matches finite differences") {
    Tensor x = Tensor::Vector({3, -3});
    x.set_requires_grad(true);
    Tape t;
    t.Backward(t.Sum(t.Relu(t.Parameter(x))));
    const auto numeric = NumericGrad(
        [](const Tensor& v) {
          Tape f;
          return f.value(f.Sum(f.Relu(f.Constant(v)))).item();
        },
        x);
    CHECK(x.grad()[0] == doctest::Approx(numeric[0]).epsilon(1e-8));
    CHECK(x.grad()[1] == doctest::Approx(numeric[1]).epsilon(1e-8));
    CHECK(Values(x.grad()) == std::vector<double>{1, 0});
  }

  TEST_CASE("log1p fixtures, gradient and domain") {
    Tape t;
    CHECK(t.value(t.Log1p(t.Constant(Tensor::Vector({0})))).item() == 0.0);
    CHECK(t.value(t.Log1p(t.Constant(Tensor::Vector({std::numbers::e - 1})))).item() ==
          doctest::Approx(1.0).epsilon(1e-15));

    Tensor x = Tensor::Vector({1});
    x.set_requires_grad(true);
    Tape g;
    g.Backward(g.Sum(g.Log1p(g.Parameter(x))));
    const auto numeric = NumericGrad(
        [](const Tensor& v) {
          Tape f;
          return f.value(f.Sum(f.Log1p(f.Constant(v)))).item();
        },
        x);
    CHECK(x.grad()[0] == doctest::Approx(numeric[0]).epsilon(1e-8));
    CHECK(x.grad()[0] == doctest::Approx(0.5).epsilon(1e-15));

    Tape d;
    CHECK(KindOf([&] { d.Log1p(d.Constant(Tensor::Vector({-1}))); }) == ErrorKind::kDomain);
    CHECK(KindOf([&] { d.Log1p(d.Constant(Tensor::Vector({-2}))); }) == ErrorKind::kDomain);
  }

  TEST_CASE("max_over_axis fixtures") {
    Tape t;
    MaxResult m = t.MaxOverAxis(t.Constant(Tensor::Matrix({{1, 5}, {3, 2}})), 0);
    CHECK(Values(t.value(m.values).data()) == std::vector<double>{3, 5});
    CHECK(m.arg_indices == IndexTensor{1, 0});

    MaxResult single = t.MaxOverAxis(t.Constant(Tensor::Matrix({{4, -1, 7}})), 0);
    CHECK(Values(t.value(single.values).data()) == std::vector<double>{4, -1, 7});

    CHECK(KindOf([&] { t.MaxOverAxis(t.Constant(Tensor::Matrix({{1}})), 2); }) ==
          ErrorKind::kDimension);
  }

  TEST_CASE("max_over_axis tie routes gradient to lowest index") {
    Tensor x = Tensor::Matrix({{2}, {2}});
    x.set_requires_grad(true);
    Tape t;
    MaxResult m = t.MaxOverAxis(t.Parameter(x), 0);
    CHECK(m.arg_indices == IndexTensor{0});
    t.Backward(t.Sum(m.values));
    CHECK(Values(x.grad()) == std::vector<double>{1, 0});
  }

  TEST_CASE("max_over_axis backward conserves gradient mass") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor x = RandomTensor(rng, {1 + rng.Below(5), 1 + rng.Below(5)});
      x.set_requires_grad(true);
      const Tensor w = RandomTensor(rng, {x.shape()[1]});
      Tape t;
      Var vals = t.MaxOverAxis(t.Parameter(x), 0).values;
      t.Backward(t.Dot(vals, t.Constant(w)));
      double routed = 0.0, incoming = 0.0;
      for (double g : x.grad()) routed += g;
      for (double g : w.data()) incoming += g;
      CHECK(routed == doctest::Approx(incoming).epsilon(1e-12));
    }
  }

  TEST_CASE("softmax_rows fixtures") {
    Tape t;
    Var a = t.SoftmaxRows(t.Constant(Tensor::Matrix({{0, 0}})));
    CHECK(t.value(a).at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.value(a).at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    Var b = t.SoftmaxRows(t.Constant(Tensor::Matrix({{std::log(1.0), std::log(3.0)}})));
    CHECK(t.value(b).at(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(t.value(b).at(0, 1) == doctest::Approx(0.75).epsilon(1e-14));

    Var c = t.SoftmaxRows(t.Constant(Tensor::Matrix({{5, 100}})), Tensor::Matrix({{0, kMaskValue}}));
    CHECK(t.value(c).at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(t.value(c).at(0, 1) == doctest::Approx(0.0));

    CHECK(KindOf([&] {
            t.SoftmaxRows(t.Constant(Tensor::Matrix({{1, 2}})), Tensor::Matrix({{kMaskValue, kMaskValue}}));
          }) == ErrorKind::kDegenerateMask);
  }

  TEST_CASE("softmax_rows rows sum to one within 1e-12") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      Tape t;
      const Tensor x = RandomTensor(rng, {1 + rng.Below(6), 1 + rng.Below(8)}, 10.0);
      const Tensor& y = t.value(t.SoftmaxRows(t.Constant(x)));
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) {
          CHECK(y.at(r, c) >= 0.0);
          CHECK(y.at(r, c) <= 1.0);
          s += y.at(r, c);
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
  }

  TEST_CASE("embedding_lookup fixtures") {
    Tape t;
    const Tensor table = Tensor::Matrix({{1, 2, 3}, {4, 5, 6}});
    Var tab = t.Constant(table);
    const TermId first[] = {0};
    CHECK(t.value(t.EmbeddingLookup(tab, first)) == Tensor::Matrix({{1, 2, 3}}));
    const Tensor& empty = t.value(t.EmbeddingLookup(tab, std::span<const TermId>{}));
    CHECK(empty.shape() == Shape{0, 3});
    const TermId bad[] = {2};
    CHECK(KindOf([&] { t.EmbeddingLookup(tab, bad); }) == ErrorKind::kVocabulary);
  }

  TEST_CASE("embedding_lookup repeated ids accumulate gradient") {
    Tensor table = Tensor::Matrix({{1, 2, 3}, {4, 5, 6}});
    table.set_requires_grad(true);
    const TermId ids[] = {1, 1};
    const Tensor w = Tensor::Matrix({{0.5, -1, 2}, {1.5, 3, -2}});
    Tape t;
    Var rows = t.EmbeddingLookup(t.Parameter(table), ids);
    CHECK(t.value(rows) == Tensor::Matrix({{4, 5, 6}, {4, 5, 6}}));
    t.Backward(t.Dot(rows, t.Constant(w)));
    const auto numeric = NumericGrad(
        [&](const Tensor& x) {
          Tape f;
          return f.value(f.Dot(f.EmbeddingLookup(f.Constant(x), ids), f.Constant(w))).item();
        },
        table);
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      CHECK(table.grad()[i] == doctest::Approx(numeric[i]).epsilon(1e-8));
    }
    CHECK(Values(table.grad()) == std::vector<double>{0, 0, 0, 2, 2, 0});
  }

  TEST_CASE("backward fixtures") {
    Tensor x = Tensor::Vector({1, 2, 3});
    x.set_requires_grad(true);
    Tape t;
    t.Backward(t.Sum(t.Parameter(x)));
    CHECK(Values(x.grad()) == std::vector<double>{1, 1, 1});

    Tensor y = Tensor::Vector({2, -1});
    y.set_requires_grad(true);
    Tape u;
    u.Backward(u.Sum(u.Square(u.Relu(u.Parameter(y)))));
    CHECK(Values(y.grad()) == std::vector<double>{4, 0});
    const auto numeric = NumericGrad(
        [](const Tensor& v) {
          Tape f;
          return f.value(f.Sum(f.Square(f.Relu(f.Constant(v))))).item();
        },
        y);
    CHECK(y.grad()[0] == doctest::Approx(numeric[0]).epsilon(1e-8));
    CHECK(y.grad()[1] == doctest::Approx(numeric[1]).epsilon(1e-8));
  }

  TEST_CASE("backward errors") {
    Tape t;
    Var v = t.Constant(Tensor::Vector({1, 2}));
    CHECK(KindOf([&] { t.Backward(v); }) == ErrorKind::kShape);
    Var s = t.Sum(v);
    t.Backward(s);
    CHECK(KindOf([&] { t.Backward(s); }) == ErrorKind::kState);
  }

  TEST_CASE("tape replay is bitwise deterministic") {
    Rng rng(3);
    const Tensor init = RandomTensor(rng, {4, 3});
    const Tensor w = RandomTensor(rng, {3, 3});
    auto run = [&] {
      Tensor x = init;
      x.set_requires_grad(true);
      Tape t;
      Var h = t.SoftmaxRows(t.MatMul(t.Parameter(x), t.Constant(w)));
      Var loss = t.Sum(t.Log1p(t.Relu(h)));
      const double value = t.value(loss).item();
      t.Backward(loss);
      return std::make_pair(value, Values(x.grad()));
    };
    CHECK(run() == run());
  }

  TEST_CASE("finite_difference_check fixtures") {
    CHECK(FiniteDifferenceCheck([](Tape& t, Var x) { return t.Sum(t.Square(x)); },
                                Tensor::Vector({1, 2}), 1e-6) < 1e-7);
    CHECK(FiniteDifferenceCheck([](Tape& t, Var) { return t.Constant(Tensor::Scalar(3.0)); },
                                Tensor::Vector({1, 2}), 1e-6) == 0.0);
    Rng rng(17);
    Tensor x({8});
    for (double& v : x.data()) v = rng.Uniform(0.01, 3.0);
    CHECK(FiniteDifferenceCheck([](Tape& t, Var v) { return t.Sum(t.Log1p(t.Relu(v))); }, x, 1e-6) <
          1e-5);
  }

  TEST_CASE("finite_difference_check rejects non-finite values") {
    CHECK(KindOf([] {
            FiniteDifferenceCheck(
                [](Tape& t, Var x) { return t.Sum(t.Scale(t.Square(x), 1e308)); },
                Tensor::Vector({1e10}), 1e-6);
          }) == ErrorKind::kNumeric);
  }
}

}  // namespace
}  // namespace lsr
