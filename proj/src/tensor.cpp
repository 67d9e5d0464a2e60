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

#include "lsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lsr/error.hpp"

namespace lsr {
namespace {

// Row-major [rows×cols] to [cols×rows].
std::vector<double> Transposed(const double* src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

std::size_t Product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    Fail(ErrorKind::kDimension, std::string(op) + ": shapes " + ShapeToString(a.shape()) +
                                    " and " + ShapeToString(b.shape()) + " differ");
  }
}

void RequireMatrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    Fail(ErrorKind::kDimension,
         std::string(op) + ": expected a matrix, got shape " + ShapeToString(t.shape()));
  }
}

}  // namespace

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(Shape shape, bool requires_grad)
    : shape_(std::move(shape)), data_(Product(shape_), 0.0), requires_grad_(requires_grad) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : shape_(std::move(shape)), data_(std::move(data)), requires_grad_(requires_grad) {
  Require(Product(shape_) == data_.size(), ErrorKind::kShape,
          "data length " + std::to_string(data_.size()) + " does not match shape " +
              ShapeToString(shape_));
}

Tensor Tensor::Scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::Vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& row : rows) {
    Require(row.size() == n, ErrorKind::kShape, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({m, n}, std::move(data));
}

std::size_t Tensor::rows() const {
  switch (rank()) {
    case 0:
    case 1: return 1;
    case 2: return shape_[0];
    default: Fail(ErrorKind::kDimension, "rows() on tensor of shape " + ShapeToString(shape_));
  }
}

std::size_t Tensor::cols() const {
  switch (rank()) {
    case 0: return 1;
    case 1: return shape_[0];
    case 2: return shape_[1];
    default: Fail(ErrorKind::kDimension, "cols() on tensor of shape " + ShapeToString(shape_));
  }
}

double Tensor::item() const {
  Require(size() == 1, ErrorKind::kShape, "item() on tensor of shape " + ShapeToString(shape_));
  return data_[0];
}

std::span<const double> Tensor::grad() const {
  if (!grad_) return {};
  return *grad_;
}

std::span<double> Tensor::mutable_grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0);
  return *grad_;
}

void Tensor::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

// ---------------------------------------------------------------- Tape

Var Tape::Record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Require(!backward_done_, ErrorKind::kState, "cannot record on a tape after backward");
  nodes_.push_back(Node{std::move(value), std::move(inputs), std::move(backward), nullptr});
  return Var{nodes_.size() - 1};
}

Var Tape::Constant(Tensor value) {
  value.set_requires_grad(false);
  value.clear_grad();
  return Record(std::move(value), {}, nullptr);
}

Var Tape::Parameter(Tensor& param) {
  Tensor copy(param.shape(), std::vector<double>(param.data().begin(), param.data().end()));
  Var v = Record(std::move(copy), {}, nullptr);
  if (param.requires_grad()) nodes_[v.id].bound = &param;
  return v;
}

std::span<const double> Tape::grad(Var v) const {
  if (!backward_done_) return {};
  return grads_.at(v.id);
}

Var Tape::MatMul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  RequireMatrix(x, "matmul");
  RequireMatrix(y, "matmul");
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  if (y.rows() != k) {
    Fail(ErrorKind::kDimension, "matmul: inner dimensions disagree for " +
                                    ShapeToString(x.shape()) + " x " + ShapeToString(y.shape()));
  }
  Tensor out({m, n});
  const double* xp = x.data().data();
  const double* yp = y.data().data();
  double* op = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = xp[i * k + p];
      const double* yrow = yp + p * n;
      double* orow = op + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
    }
  }
  return Record(std::move(out), {a.id, b.id}, [m, k, n](Tape& t, std::size_t self) {
    const auto& in = t.nodes_[self].inputs;
    const double* g = t.grads_[self].data();
    const double* xp = t.nodes_[in[0]].value.data().data();
    const double* yp = t.nodes_[in[1]].value.data().data();
    double* ga = t.grads_[in[0]].data();
    double* gb = t.grads_[in[1]].data();
    // dA = dC·Bᵀ, accumulated per row into a scratch buffer before adding.
    const std::vector<double> yt = Transposed(yp, k, n);
    std::vector<double> acc(k);
    for (std::size_t i = 0; i < m; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const double* grow = g + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double gv = grow[j];
        const double* ytrow = yt.data() + j * k;
        for (std::size_t p = 0; p < k; ++p) acc[p] += gv * ytrow[p];
      }
      double* garow = ga + i * k;
      for (std::size_t p = 0; p < k; ++p) garow[p] += acc[p];
    }
    // dB = Aᵀ·dC
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double xv = xp[i * k + p];
        const double* grow = g + i * n;
        double* gbrow = gb + p * n;
        for (std::size_t j = 0; j < n; ++j) gbrow[j] += xv * grow[j];
      }
    }
  });
}

Var Tape::MatMulTransposed(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  RequireMatrix(x, "matmul_transposed");
  RequireMatrix(y, "matmul_transposed");
  const std::size_t m = x.rows(), k = x.cols(), n = y.rows();
  if (y.cols() != k) {
    Fail(ErrorKind::kDimension, "matmul_transposed: inner dimensions disagree for " +
                                    ShapeToString(x.shape()) + " x " +
                                    ShapeToString(y.shape()) + "^T");
  }
  Tensor out({m, n});
  const double* xp = x.data().data();
  const double* yp = y.data().data();
  double* op = out.data().data();
  // Row updates over yᵀ vectorize; each output still sums p in ascending order.
  for (std::size_t i = 0; i < m; ++i) {
    const double* xrow = xp + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* yrow = yp + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += xrow[p] * yrow[p];
      op[i * n + j] = acc;
    }
  }
  return Record(std::move(out), {a.id, b.id}, [m, k, n](Tape& t, std::size_t self) {
    const auto& in = t.nodes_[self].inputs;
    const double* g = t.grads_[self].data();
    const double* xp = t.nodes_[in[0]].value.data().data();
    const double* yp = t.nodes_[in[1]].value.data().data();
    double* ga = t.grads_[in[0]].data();
    double* gb = t.grads_[in[1]].data();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gv = g[i * n + j];
        if (gv == 0.0) continue;
        const double* yrow = yp + j * k;
        const double* xrow = xp + i * k;
        double* garow = ga + i * k;
        double* gbrow = gb + j * k;
        for (std::size_t p = 0; p < k; ++p) {
          garow[p] += gv * yrow[p];
          gbrow[p] += gv * xrow[p];
        }
      }
    }
  });
}

Var Tape::Add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  RequireSameShape(x, y, "add");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Record(std::move(out), {a.id, b.id}, [](Tape& t, std::size_t self) {
    const auto& in = t.nodes_[self].inputs;
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[in[0]];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = t.grads_[in[1]];
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

Var Tape::Sub(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  RequireSameShape(x, y, "sub");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return Record(std::move(out), {a.id, b.id}, [](Tape& t, std::size_t self) {
    const auto& in = t.nodes_[self].inputs;
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[in[0]];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = t.grads_[in[1]];
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
}

Var Tape::Mul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  RequireSameShape(x, y, "mul");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Record(std::move(out), {a.id, b.id}, [](Tape& t, std::size_t self) {
    const auto& in = t.nodes_[self].inputs;
    const auto& g = t.grads_[self];
    const auto x = t.nodes_[in[0]].value.data();
    const auto y = t.nodes_[in[1]].value.data();
    auto& ga = t.grads_[in[0]];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    auto& gb = t.grads_[in[1]];
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
  });
}

Var Tape::AddRow(Var x, Var row) {
  const Tensor& a = value(x);
  const Tensor& r = value(row);
  RequireMatrix(a, "add_row");
  const std::size_t m = a.rows(), n = a.cols();
  if (r.size() != n || r.rank() > 2 || r.rows() != 1) {
    Fail(ErrorKind::kDimension, "add_row: row " + ShapeToString(r.shape()) +
                                    " does not broadcast over " + ShapeToString(a.shape()));
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] + r[j];
  }
  return Record(std::move(out), {x.id, row.id}, [m, n](Tape& t, std::size_t self) {
    const auto& in = t.nodes_[self].inputs;
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[in[0]];
    auto& gr = t.grads_[in[1]];
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j];
        gr[j] += g[i * n + j];
      }
    }
  });
}

Var Tape::Scale(Var x, double factor) {
  const Tensor& a = value(x);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return Record(std::move(out), {x.id}, [factor](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Var Tape::Reshape(Var x, Shape shape) {
  const Tensor& a = value(x);
  Require(Product(shape) == a.size(), ErrorKind::kShape,
          "reshape: " + ShapeToString(a.shape()) + " to " + ShapeToString(shape));
  Tensor out(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  return Record(std::move(out), {x.id}, [](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::Relu(Var x) {
  const Tensor& a = value(x);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] > 0.0 ? a[i] : 0.0;
    kink_margin_ = std::min(kink_margin_, std::abs(a[i]));
  }
  return Record(std::move(out), {x.id}, [](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    const std::size_t in = t.nodes_[self].inputs[0];
    const auto a = t.nodes_[in].value.data();
    auto& ga = t.grads_[in];
    // Subgradient at exactly 0 is 0.
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (a[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var Tape::Log1p(Var x) {
  const Tensor& a = value(x);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(a[i] > -1.0)) {
      Fail(ErrorKind::kDomain, "log1p: element " + std::to_string(i) + " = " +
                                   std::to_string(a[i]) + " is not > -1");
    }
    out[i] = std::log1p(a[i]);
  }
  return Record(std::move(out), {x.id}, [](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    const std::size_t in = t.nodes_[self].inputs[0];
    const auto a = t.nodes_[in].value.data();
    auto& ga = t.grads_[in];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (1.0 + a[i]);
  });
}

Var Tape::Square(Var x) {
  const Tensor& a = value(x);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * a[i];
  return Record(std::move(out), {x.id}, [](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    const std::size_t in = t.nodes_[self].inputs[0];
    const auto a = t.nodes_[in].value.data();
    auto& ga = t.grads_[in];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * a[i] * g[i];
  });
}

Var Tape::Sum(Var x) {
  const Tensor& a = value(x);
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Record(Tensor::Scalar(total), {x.id}, [](Tape& t, std::size_t self) {
    const double g = t.grads_[self][0];
    for (double& v : t.grads_[t.nodes_[self].inputs[0]]) v += g;
  });
}

Var Tape::Mean(Var x) {
  const std::size_t n = value(x).size();
  Require(n > 0, ErrorKind::kShape, "mean of an empty tensor");
  return Scale(Sum(x), 1.0 / static_cast<double>(n));
}

namespace {

// Splits `shape` around `axis` into (outer, extent, inner) strides.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit SplitAxis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    Fail(ErrorKind::kDimension, std::string(op) + ": axis " + std::to_string(axis) +
                                    " out of range for shape " + ShapeToString(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape DropAxis(const Shape& shape, std::size_t axis) {
  Shape out = shape;
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  return out;
}

}  // namespace

Var Tape::SumOverAxis(Var x, std::size_t axis) {
  const Tensor& a = value(x);
  const AxisSplit s = SplitAxis(a.shape(), axis, "sum_over_axis");
  Tensor out(DropAxis(a.shape(), axis));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t e = 0; e < s.extent; ++e) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        out[o * s.inner + i] += a[(o * s.extent + e) * s.inner + i];
      }
    }
  }
  return Record(std::move(out), {x.id}, [s](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t e = 0; e < s.extent; ++e) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          ga[(o * s.extent + e) * s.inner + i] += g[o * s.inner + i];
        }
      }
    }
  });
}

MaxResult Tape::MaxOverAxis(Var x, std::size_t axis) {
  const Tensor& a = value(x);
  const AxisSplit s = SplitAxis(a.shape(), axis, "max_over_axis");
  Require(s.extent > 0, ErrorKind::kDimension, "max_over_axis: empty axis");
  Tensor out(DropAxis(a.shape(), axis));
  IndexTensor args(out.size(), 0);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = 0;
      double best_value = a[o * s.extent * s.inner + i];
      double runner_up = -std::numeric_limits<double>::infinity();
      // Strict comparison: ties keep the lowest index.
      for (std::size_t e = 1; e < s.extent; ++e) {
        const double v = a[(o * s.extent + e) * s.inner + i];
        if (v > best_value) {
          runner_up = best_value;
          best_value = v;
          best = e;
        } else {
          runner_up = std::max(runner_up, v);
        }
      }
      // Exact ties only arise between ReLU zeros, already covered above.
      if (best_value > runner_up) kink_margin_ = std::min(kink_margin_, best_value - runner_up);
      out[o * s.inner + i] = best_value;
      args[o * s.inner + i] = best;
    }
  }
  Var values = Record(std::move(out), {x.id}, [s, args](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t k = o * s.inner + i;
        ga[(o * s.extent + args[k]) * s.inner + i] += g[k];
      }
    }
  });
  return MaxResult{values, std::move(args)};
}

Var Tape::SoftmaxRows(Var x, const std::optional<Tensor>& mask) {
  const Tensor& a = value(x);
  RequireMatrix(a, "softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (mask) RequireSameShape(a, *mask, "softmax_rows mask");
  Tensor out(a.shape());
  std::vector<double> row(n);
  for (std::size_t i = 0; i < m; ++i) {
    bool any_open = false;
    for (std::size_t j = 0; j < n; ++j) {
      double v = a[i * n + j];
      if (mask) {
        const double mv = (*mask)[i * n + j];
        if (mv > kMaskValue) any_open = true;
        v += mv;
      } else {
        any_open = true;
      }
      row[j] = v;
    }
    if (n == 0 || !any_open) {
      Fail(ErrorKind::kDegenerateMask,
           "softmax_rows: every position of row " + std::to_string(i) + " is masked");
    }
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] / total;
  }
  return Record(std::move(out), {x.id}, [m, n](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    const auto y = t.nodes_[self].value.data();
    auto& ga = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t i = 0; i < m; ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j) inner += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += y[i * n + j] * (g[i * n + j] - inner);
      }
    }
  });
}

Var Tape::EmbeddingLookup(Var table, std::span<const TermId> ids) {
  const Tensor& tab = value(table);
  RequireMatrix(tab, "embedding_lookup");
  const std::size_t vocab = tab.rows(), d = tab.cols();
  Tensor out({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      Fail(ErrorKind::kVocabulary, "embedding_lookup: id " + std::to_string(ids[r]) +
                                       " out of range for vocabulary of " +
                                       std::to_string(vocab));
    }
    std::copy_n(tab.data().begin() + static_cast<std::ptrdiff_t>(ids[r] * d), d,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  std::vector<TermId> rows(ids.begin(), ids.end());
  return Record(std::move(out), {table.id}, [rows, d](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& gt = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) gt[rows[r] * d + c] += g[r * d + c];
    }
  });
}

Var Tape::LayerNorm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& a = value(x);
  RequireMatrix(a, "layer_norm");
  const std::size_t m = a.rows(), n = a.cols();
  Require(value(gamma).size() == n && value(beta).size() == n, ErrorKind::kDimension,
          "layer_norm: gain/bias width does not match " + ShapeToString(a.shape()));
  const auto g = value(gamma).data();
  const auto b = value(beta).data();
  Tensor out(a.shape());
  std::vector<double> normalized(m * n), inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += a[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = a[i * n + j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double z = (a[i * n + j] - mean) * inv_std[i];
      normalized[i * n + j] = z;
      out[i * n + j] = z * g[j] + b[j];
    }
  }
  return Record(std::move(out), {x.id, gamma.id, beta.id},
                [m, n, normalized = std::move(normalized), inv_std = std::move(inv_std)](
                    Tape& t, std::size_t self) {
                  const auto& in = t.nodes_[self].inputs;
                  const auto& gout = t.grads_[self];
                  const auto gain = t.nodes_[in[1]].value.data();
                  auto& gx = t.grads_[in[0]];
                  auto& gg = t.grads_[in[1]];
                  auto& gb = t.grads_[in[2]];
                  const double inv_n = 1.0 / static_cast<double>(n);
                  for (std::size_t i = 0; i < m; ++i) {
                    double sum_dz = 0.0, sum_dz_z = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                      const double go = gout[i * n + j];
                      const double z = normalized[i * n + j];
                      gg[j] += go * z;
                      gb[j] += go;
                      const double dz = go * gain[j];
                      sum_dz += dz;
                      sum_dz_z += dz * z;
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                      const double z = normalized[i * n + j];
                      const double dz = gout[i * n + j] * gain[j];
                      gx[i * n + j] += inv_std[i] * (dz - inv_n * sum_dz - z * inv_n * sum_dz_z);
                    }
                  }
                });
}

Var Tape::SliceCols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& a = value(x);
  RequireMatrix(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  Require(begin + count <= n, ErrorKind::kDimension,
          "slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for " + ShapeToString(a.shape()));
  Tensor out({m, count});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = a[i * n + begin + j];
  }
  return Record(std::move(out), {x.id}, [m, n, begin, count](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < count; ++j) ga[i * n + begin + j] += g[i * count + j];
    }
  });
}

Var Tape::SliceRows(Var x, std::size_t begin, std::size_t count) {
  const Tensor& a = value(x);
  RequireMatrix(a, "slice_rows");
  const std::size_t m = a.rows(), n = a.cols();
  Require(begin + count <= m, ErrorKind::kDimension,
          "slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for " + ShapeToString(a.shape()));
  Tensor out({count, n});
  std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(begin * n), count * n,
              out.data().begin());
  return Record(std::move(out), {x.id}, [n, begin, count](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& ga = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t k = 0; k < count * n; ++k) ga[begin * n + k] += g[k];
  });
}

Var Tape::ConcatCols(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorKind::kShape, "concat_cols of nothing");
  const std::size_t m = value(parts[0]).rows();
  std::vector<std::size_t> widths, inputs;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    RequireMatrix(v, "concat_cols");
    Require(v.rows() == m, ErrorKind::kDimension, "concat_cols: row counts differ");
    widths.push_back(v.cols());
    inputs.push_back(p.id);
    total += v.cols();
  }
  Tensor out({m, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = value(parts[k]);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + offset + j] = v[i * widths[k] + j];
    }
    offset += widths[k];
  }
  return Record(std::move(out), std::move(inputs), [m, total, widths](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      auto& gp = t.grads_[t.nodes_[self].inputs[k]];
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < widths[k]; ++j) gp[i * widths[k] + j] += g[i * total + offset + j];
      }
      offset += widths[k];
    }
  });
}

Var Tape::ConcatRows(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorKind::kShape, "concat_rows of nothing");
  const std::size_t n = value(parts[0]).cols();
  std::vector<std::size_t> sizes, inputs;
  std::size_t rows = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    Require(v.rank() <= 2 && v.cols() == n, ErrorKind::kDimension,
            "concat_rows: column counts differ");
    sizes.push_back(v.size());
    inputs.push_back(p.id);
    rows += v.rows();
  }
  Tensor out({rows, n});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += v.size();
  }
  return Record(std::move(out), std::move(inputs), [sizes](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    std::size_t offset = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      auto& gp = t.grads_[t.nodes_[self].inputs[k]];
      for (std::size_t i = 0; i < sizes[k]; ++i) gp[i] += g[offset + i];
      offset += sizes[k];
    }
  });
}

Var Tape::ScatterAdd(Var values, std::span<const TermId> ids, std::size_t width) {
  const Tensor& v = value(values);
  Require(v.size() == ids.size(), ErrorKind::kShape,
          "scatter_add: " + std::to_string(v.size()) + " values for " +
              std::to_string(ids.size()) + " ids");
  Tensor out({1, width});
  for (std::size_t j = 0; j < ids.size(); ++j) {
    Require(ids[j] < width, ErrorKind::kVocabulary,
            "scatter_add: id " + std::to_string(ids[j]) + " out of range " + std::to_string(width));
    out[ids[j]] += v[j];
  }
  std::vector<TermId> cols(ids.begin(), ids.end());
  return Record(std::move(out), {values.id}, [cols](Tape& t, std::size_t self) {
    const auto& g = t.grads_[self];
    auto& gv = t.grads_[t.nodes_[self].inputs[0]];
    for (std::size_t j = 0; j < cols.size(); ++j) gv[j] += g[cols[j]];
  });
}

Var Tape::Dot(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  Require(x.size() == y.size(), ErrorKind::kDimension,
          "dot: sizes " + ShapeToString(x.shape()) + " and " + ShapeToString(y.shape()));
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i] * y[i];
  return Record(Tensor::Scalar(total), {a.id, b.id}, [](Tape& t, std::size_t self) {
    const double g = t.grads_[self][0];
    const auto& in = t.nodes_[self].inputs;
    const auto x = t.nodes_[in[0]].value.data();
    const auto y = t.nodes_[in[1]].value.data();
    auto& ga = t.grads_[in[0]];
    auto& gb = t.grads_[in[1]];
    for (std::size_t i = 0; i < x.size(); ++i) {
      ga[i] += g * y[i];
      gb[i] += g * x[i];
    }
  });
}

void Tape::Backward(Var loss) {
  Require(!backward_done_, ErrorKind::kState, "backward called twice on the same tape");
  Require(!nodes_.empty(), ErrorKind::kState, "backward on an empty tape");
  Require(loss.id < nodes_.size(), ErrorKind::kState, "loss is not recorded on this tape");
  Require(nodes_[loss.id].value.size() == 1, ErrorKind::kShape,
          "backward needs a scalar loss, got shape " +
              ShapeToString(nodes_[loss.id].value.shape()));
  grads_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) grads_[i].assign(nodes_[i].value.size(), 0.0);
  grads_[loss.id][0] = 1.0;
  backward_done_ = true;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward) {
      n.backward(*this, i);
    } else if (n.bound != nullptr) {
      auto g = n.bound->mutable_grad();
      const auto& src = grads_[i];
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += src[k];
    }
  }
}

// ---------------------------------------------------------------- checks

namespace {

double RelativeError(std::span<const double> analytic, std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double err = std::abs(analytic[i] - numeric[i]) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

double CheckedScalar(const Tape& tape, Var v) {
  const double value = tape.value(v).item();
  Require(std::isfinite(value), ErrorKind::kNumeric, "finite-difference check: non-finite loss");
  return value;
}

}  // namespace

double FiniteDifferenceCheck(const TapeFunction& f, const Tensor& x, double eps) {
  Tensor param(x.shape(), std::vector<double>(x.data().begin(), x.data().end()), true);
  Tensor* params[] = {&param};
  return FiniteDifferenceCheck([&](Tape& tape) { return f(tape, tape.Parameter(param)); },
                               params, eps);
}

double FiniteDifferenceCheck(const std::function<Var(Tape&)>& loss,
                             std::span<Tensor* const> params, double eps) {
  for (Tensor* p : params) {
    p->set_requires_grad(true);
    p->clear_grad();
  }
  {
    Tape tape;
    Var out = loss(tape);
    CheckedScalar(tape, out);
    tape.Backward(out);
  }
  double worst = 0.0;
  for (Tensor* p : params) {
    std::vector<double> analytic(p->size(), 0.0);
    if (p->has_grad()) analytic.assign(p->grad().begin(), p->grad().end());
    for (double g : analytic) {
      Require(std::isfinite(g), ErrorKind::kNumeric, "finite-difference check: non-finite gradient");
    }
    std::vector<double> numeric(p->size());
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = (*p)[i];
      (*p)[i] = saved + eps;
      Tape plus;
      const double f_plus = CheckedScalar(plus, loss(plus));
      (*p)[i] = saved - eps;
      Tape minus;
      const double f_minus = CheckedScalar(minus, loss(minus));
      (*p)[i] = saved;
      numeric[i] = (f_plus - f_minus) / (2.0 * eps);
    }
    worst = std::max(worst, RelativeError(analytic, numeric));
  }
  return worst;
}

}  // namespace lsr
