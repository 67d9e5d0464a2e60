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
#include <functional>
#include <limits>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lsr {

using Shape = std::vector<std::size_t>;
using TermId = std::uint32_t;
using TokenIds = std::vector<TermId>;
using IndexTensor = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);

// Dense row-major tensor of doubles. A tensor with requires_grad set collects
// gradients from every tape it is bound to as a parameter.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor Scalar(double value);
  static Tensor Vector(std::initializer_list<double> values);
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  // Row/column view of a tensor of rank <= 2. Rank 1 is a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * cols() + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * cols() + col]; }
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool value) { requires_grad_ = value; }

  bool has_grad() const { return grad_.has_value(); }
  std::span<const double> grad() const;
  // Allocates a zero gradient buffer on first use.
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad() { grad_.reset(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  bool requires_grad_ = false;
  std::optional<std::vector<double>> grad_;
};

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

struct MaxResult {
  Var values;
  IndexTensor arg_indices;
};

// Additive attention-mask value; a position is masked when its mask entry is
// at or below this constant.
inline constexpr double kMaskValue = -1e9;

// Records operations in execution order and replays their gradient rules in
// exact reverse order. One tape, one backward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaf holding a copy of `value`; never receives gradients outside the tape.
  Var Constant(Tensor value);
  // Leaf bound to `param`. If param.requires_grad(), Backward accumulates into
  // param's gradient buffer. `param` must outlive the backward pass.
  Var Parameter(Tensor& param);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the loss w.r.t. a recorded value; empty before Backward.
  std::span<const double> grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  Var MatMul(Var a, Var b);
  // a · bᵀ for a [m×k], b [n×k].
  Var MatMulTransposed(Var a, Var b);
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  // x [m×n] plus row [1×n] (or [n]) added to every row.
  Var AddRow(Var x, Var row);
  Var Scale(Var x, double factor);
  // Same data, new shape with equal element count.
  Var Reshape(Var x, Shape shape);
  Var Relu(Var x);
  Var Log1p(Var x);
  Var Square(Var x);
  Var Sum(Var x);
  // Mean over all elements.
  Var Mean(Var x);
  Var SumOverAxis(Var x, std::size_t axis);
  MaxResult MaxOverAxis(Var x, std::size_t axis);
  Var SoftmaxRows(Var x, const std::optional<Tensor>& mask = std::nullopt);
  Var EmbeddingLookup(Var table, std::span<const TermId> ids);
  Var LayerNorm(Var x, Var gamma, Var beta, double eps = 1e-5);
  Var SliceCols(Var x, std::size_t begin, std::size_t count);
  Var SliceRows(Var x, std::size_t begin, std::size_t count);
  Var ConcatCols(std::span<const Var> parts);
  Var ConcatRows(std::span<const Var> parts);
  // Sums values[j] into output column ids[j]; output shape [1×width].
  Var ScatterAdd(Var values, std::span<const TermId> ids, std::size_t width);
  // Σ a⊙b as a scalar.
  Var Dot(Var a, Var b);

  void Backward(Var loss);

  // Smallest distance from a non-differentiable point seen so far: |x| over
  // ReLU inputs and the top-two gap of every max reduction.
  double kink_margin() const { return kink_margin_; }

 private:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* bound = nullptr;
  };

  Var Record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);
  std::vector<double>& GradBuffer(std::size_t id) { return grads_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool backward_done_ = false;
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

// Scalar-valued function of a single tensor, expressed on a tape.
using TapeFunction = std::function<Var(Tape&, Var)>;

// Max over coordinates of |analytic − central difference| / max(1, |analytic|).
double FiniteDifferenceCheck(const TapeFunction& f, const Tensor& x, double eps = 1e-6);

// Same measure for a loss over several parameter tensors. `loss` builds the
// loss on a fresh tape from parameters bound via Tape::Parameter. Every
// coordinate of every tensor in `params` is checked.
double FiniteDifferenceCheck(const std::function<Var(Tape&)>& loss,
                             std::span<Tensor* const> params, double eps = 1e-6);

}  // namespace lsr
