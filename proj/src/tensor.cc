// Copyright 2026 The Bimodel Authors.
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

#include "tensor.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "errors.h"

namespace bimodel {

std::size_t numel(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape &shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<TensorNode<T>>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("zero-sized dimension in shape " + shape_string(shape));
  }
  if (numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() const {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), T(0));
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  node_->grad.assign(node_->value.size(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor copy(node_->shape, node_->value, node_->requires_grad);
  copy.node_->grad = node_->grad;
  return copy;
}

template <typename T>
void Tape<T>::backward(const Tensor<T> &loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  if (!recording() || !loss.requires_grad()) {
    throw ContractError("backward() on a loss that is not attached to a recording tape");
  }
  Tensor<T> seed = loss;
  seed.mutable_grad()[0] = T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

namespace ops {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
bool tracks(const Tape<T> &tape, std::initializer_list<const Tensor<T> *> inputs) {
  if (!tape.recording()) return false;
  for (const Tensor<T> *t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void require_defined(const Tensor<T> &t, const char *op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined operand");
}

template <typename T>
void require_same_shape(const Tensor<T> &a, const Tensor<T> &b, const char *op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

template <typename T>
void require_rank(const Tensor<T> &a, std::size_t rank, const char *op) {
  require_defined(a, op);
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_string(a.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  const bool grad = tracks(tape, {&a, &b});
  Tensor<T> out = Tensor<T>::zeros({m, n}, grad);
  MatrixMap<T>(out.mutable_values().data(), m, n).noalias() =
      ConstMatrixMap<T>(a.values().data(), m, k) * ConstMatrixMap<T>(b.values().data(), k, n);
  if (grad) {
    tape.record([a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      ConstMatrixMap<T> g(out.grad().data(), m, n);
      if (a.requires_grad()) {
        MatrixMap<T>(a.mutable_grad().data(), m, k).noalias() +=
            g * ConstMatrixMap<T>(b.values().data(), k, n).transpose();
      }
      if (b.requires_grad()) {
        MatrixMap<T>(b.mutable_grad().data(), k, n).noalias() +=
            ConstMatrixMap<T>(a.values().data(), m, k).transpose() * g;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &b) {
  require_same_shape(a, b, "add");
  const bool grad = tracks(tape, {&a, &b});
  std::vector<T> v(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] + bv[i];
  Tensor<T> out(a.shape(), std::move(v), grad);
  if (grad) {
    tape.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      for (const Tensor<T> *t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto tg = t->mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) tg[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &b) {
  require_same_shape(a, b, "mul");
  const bool grad = tracks(tape, {&a, &b});
  std::vector<T> v(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * bv[i];
  Tensor<T> out(a.shape(), std::move(v), grad);
  if (grad) {
    tape.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ag = a.mutable_grad();
        auto bv = b.values();
        for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto bg = b.mutable_grad();
        auto av = a.values();
        for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> add_bias(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &bias) {
  require_rank(a, 2, "add_bias");
  require_rank(bias, 1, "add_bias");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (bias.dim(0) != n) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(a.shape()));
  }
  const bool grad = tracks(tape, {&a, &bias});
  std::vector<T> v(a.values().begin(), a.values().end());
  auto bv = bias.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) v[r * n + c] += bv[c];
  Tensor<T> out(a.shape(), std::move(v), grad);
  if (grad) {
    tape.record([a, bias, out, m, n]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ag = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto bg = bias.mutable_grad();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < n; ++c) bg[c] += g[r * n + c];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(Tape<T> &tape, const Tensor<T> &a) {
  require_defined(a, "sigmoid");
  const bool grad = tracks(tape, {&a});
  std::vector<T> v(a.size());
  auto av = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(1) / (T(1) + std::exp(-av[i]));
  Tensor<T> out(a.shape(), std::move(v), grad);
  if (grad) {
    tape.record([a, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto y = out.values();
      auto ag = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * y[i] * (T(1) - y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh(Tape<T> &tape, const Tensor<T> &a) {
  require_defined(a, "tanh");
  const bool grad = tracks(tape, {&a});
  std::vector<T> v(a.size());
  auto av = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(av[i]);
  Tensor<T> out(a.shape(), std::move(v), grad);
  if (grad) {
    tape.record([a, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto y = out.values();
      auto ag = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(Tape<T> &tape, const Tensor<T> &a) {
  require_defined(a, "sum");
  const bool grad = tracks(tape, {&a});
  T total = T(0);
  for (T x : a.values()) total += x;
  Tensor<T> out = Tensor<T>::scalar(total, grad);
  if (grad) {
    tape.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const T g = out.grad()[0];
      for (T &x : a.mutable_grad()) x += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(Tape<T> &tape, std::span<const Tensor<T>> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: empty operand list");
  const Shape &first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                         shape_string(first));
  }
  bool grad = false;
  std::size_t axis_total = 0;
  for (const Tensor<T> &p : parts) {
    require_defined(p, "concat");
    const Shape &s = p.shape();
    bool compatible = s.size() == first.size();
    for (std::size_t d = 0; compatible && d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) compatible = false;
    }
    if (!compatible) {
      throw DimensionError("concat: incompatible shapes " + shape_string(first) + " and " +
                           shape_string(s) + " along axis " + std::to_string(axis));
    }
    axis_total += s[axis];
    grad = grad || p.requires_grad();
  }
  grad = grad && tape.recording();

  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  Shape shape = first;
  shape[axis] = axis_total;
  std::vector<T> v(numel(shape));
  const std::size_t row = axis_total * inner;
  std::size_t offset = 0;
  for (const Tensor<T> &p : parts) {
    const std::size_t width = p.dim(axis) * inner;
    auto pv = p.values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * width, width, v.begin() + o * row + offset);
    }
    offset += width;
  }
  Tensor<T> out(std::move(shape), std::move(v), grad);
  if (grad) {
    std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
    tape.record([inputs, out, axis, outer, inner, row]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      std::size_t off = 0;
      for (Tensor<T> &p : inputs) {
        const std::size_t width = p.dim(axis) * inner;
        if (p.requires_grad()) {
          auto pg = p.mutable_grad();
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < width; ++i) pg[o * width + i] += g[o * row + off + i];
        }
        off += width;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice(Tape<T> &tape, const Tensor<T> &a, std::size_t axis, std::size_t begin,
                std::size_t end) {
  require_defined(a, "slice");
  if (axis >= a.rank() || begin >= end || end > a.dim(axis)) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " invalid for " +
                         shape_string(a.shape()));
  }
  const bool grad = tracks(tape, {&a});
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= a.dim(d);
  for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.dim(d);
  const std::size_t src_row = a.dim(axis) * inner;
  const std::size_t width = (end - begin) * inner;
  const std::size_t start = begin * inner;

  Shape shape = a.shape();
  shape[axis] = end - begin;
  std::vector<T> v(outer * width);
  auto av = a.values();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(av.begin() + o * src_row + start, width, v.begin() + o * width);
  }
  Tensor<T> out(std::move(shape), std::move(v), grad);
  if (grad) {
    tape.record([a, out, outer, width, src_row, start]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto ag = a.mutable_grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < width; ++i) ag[o * src_row + start + i] += g[o * width + i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(Tape<T> &tape, const Tensor<T> &a, Shape shape) {
  require_defined(a, "reshape");
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " +
                         shape_string(shape));
  }
  const bool grad = tracks(tape, {&a});
  std::vector<T> v(a.values().begin(), a.values().end());
  Tensor<T> out(std::move(shape), std::move(v), grad);
  if (grad) {
    tape.record([a, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto ag = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> stack(Tape<T> &tape, std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw DimensionError("stack: empty operand list");
  const Shape &first = parts[0].shape();
  bool grad = false;
  for (const Tensor<T> &p : parts) {
    require_defined(p, "stack");
    if (p.shape() != first) {
      throw DimensionError("stack: shape mismatch " + shape_string(first) + " vs " +
                           shape_string(p.shape()));
    }
    grad = grad || p.requires_grad();
  }
  grad = grad && tape.recording();
  const std::size_t width = numel(first);
  Shape shape{parts.size()};
  shape.insert(shape.end(), first.begin(), first.end());
  std::vector<T> v(parts.size() * width);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::copy(parts[i].values().begin(), parts[i].values().end(), v.begin() + i * width);
  }
  Tensor<T> out(std::move(shape), std::move(v), grad);
  if (grad) {
    std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
    tape.record([inputs, out, width]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].requires_grad()) continue;
        auto pg = inputs[i].mutable_grad();
        for (std::size_t j = 0; j < width; ++j) pg[j] += g[i * width + j];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> select(Tape<T> &tape, const Tensor<T> &a, std::size_t index) {
  require_defined(a, "select");
  if (a.rank() < 2) throw DimensionError("select: needs rank >= 2, got " + shape_string(a.shape()));
  if (index >= a.dim(0)) {
    throw IndexError("select: index " + std::to_string(index) + " out of range for " +
                     shape_string(a.shape()));
  }
  const bool grad = tracks(tape, {&a});
  Shape shape(a.shape().begin() + 1, a.shape().end());
  const std::size_t width = numel(shape);
  std::vector<T> v(a.values().begin() + index * width, a.values().begin() + (index + 1) * width);
  Tensor<T> out(std::move(shape), std::move(v), grad);
  if (grad) {
    tape.record([a, out, index, width]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto ag = a.mutable_grad();
      for (std::size_t j = 0; j < width; ++j) ag[index * width + j] += g[j];
    });
  }
  return out;
}

template <typename T>
Tensor<T> embedding_lookup(Tape<T> &tape, const Tensor<T> &table,
                           std::span<const std::int32_t> indices) {
  require_rank(table, 2, "embedding_lookup");
  if (indices.empty()) throw DimensionError("embedding_lookup: empty index list");
  const std::size_t vocab = table.dim(0), dim = table.dim(1);
  for (std::int32_t id : indices) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw IndexError("embedding_lookup: index " + std::to_string(id) +
                       " out of range for table " + shape_string(table.shape()));
    }
  }
  const bool grad = tracks(tape, {&table});
  std::vector<T> v(indices.size() * dim);
  auto tv = table.values();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy_n(tv.begin() + indices[r] * dim, dim, v.begin() + r * dim);
  }
  Tensor<T> out({indices.size(), dim}, std::move(v), grad);
  if (grad) {
    std::vector<std::int32_t> ids(indices.begin(), indices.end());
    tape.record([table, out, ids, dim]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto tg = table.mutable_grad();
      for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < dim; ++c) tg[ids[r] * dim + c] += g[r * dim + c];
    });
  }
  return out;
}

template <typename T>
Tensor<T> blend_rows(Tape<T> &tape, std::span<const std::uint8_t> keep, const Tensor<T> &a,
                     const Tensor<T> &fallback) {
  require_same_shape(a, fallback, "blend_rows");
  require_rank(a, 2, "blend_rows");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (keep.size() != rows) {
    throw DimensionError("blend_rows: " + std::to_string(keep.size()) + " flags for " +
                         shape_string(a.shape()));
  }
  const bool grad = tracks(tape, {&a, &fallback});
  std::vector<T> v(a.size());
  auto av = a.values(), fv = fallback.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto &src = keep[r] ? av : fv;
    std::copy_n(src.begin() + r * cols, cols, v.begin() + r * cols);
  }
  Tensor<T> out(a.shape(), std::move(v), grad);
  if (grad) {
    std::vector<std::uint8_t> flags(keep.begin(), keep.end());
    tape.record([a, fallback, out, flags, cols]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      for (std::size_t r = 0; r < flags.size(); ++r) {
        const Tensor<T> &dst = flags[r] ? a : fallback;
        if (!dst.requires_grad()) continue;
        auto dg = dst.mutable_grad();
        for (std::size_t c = 0; c < cols; ++c) dg[r * cols + c] += g[r * cols + c];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> gather_steps(Tape<T> &tape, const Tensor<T> &x,
                       std::span<const std::size_t> step_index) {
  require_rank(x, 3, "gather_steps");
  const std::size_t steps = x.dim(0), batch = x.dim(1), dim = x.dim(2);
  if (step_index.size() != batch) {
    throw DimensionError("gather_steps: " + std::to_string(step_index.size()) +
                         " indices for " + shape_string(x.shape()));
  }
  for (std::size_t s : step_index) {
    if (s >= steps) {
      throw IndexError("gather_steps: step " + std::to_string(s) + " out of range for " +
                       shape_string(x.shape()));
    }
  }
  const bool grad = tracks(tape, {&x});
  std::vector<T> v(batch * dim);
  auto xv = x.values();
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(xv.begin() + (step_index[b] * batch + b) * dim, dim, v.begin() + b * dim);
  }
  Tensor<T> out({batch, dim}, std::move(v), grad);
  if (grad) {
    std::vector<std::size_t> idx(step_index.begin(), step_index.end());
    tape.record([x, out, idx, batch, dim]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto xg = x.mutable_grad();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < dim; ++c) xg[(idx[b] * batch + b) * dim + c] += g[b * dim + c];
    });
  }
  return out;
}

template <typename T>
Tensor<T> weighted_softmax_cross_entropy(Tape<T> &tape, const Tensor<T> &logits,
                                         std::span<const std::int32_t> targets,
                                         std::span<const T> weights, T normalizer) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets and " + std::to_string(weights.size()) + " weights for " +
                         shape_string(logits.shape()));
  }
  if (!(normalizer > T(0))) throw ContractError("softmax_cross_entropy: normalizer must be > 0");
  for (std::size_t r = 0; r < rows; ++r) {
    if (weights[r] == T(0)) continue;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= classes) {
      throw IndexError("softmax_cross_entropy: target " + std::to_string(targets[r]) +
                       " out of range for " + std::to_string(classes) + " classes");
    }
  }
  const bool grad = tracks(tape, {&logits});
  std::vector<T> probs = softmax_rows(logits);
  auto lv = logits.values();
  T total = T(0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (weights[r] == T(0)) continue;
    const T *row = lv.data() + r * classes;
    const T top = *std::max_element(row, row + classes);
    T z = T(0);
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - top);
    total += weights[r] * (std::log(z) + top - row[targets[r]]);
  }
  Tensor<T> out = Tensor<T>::scalar(total / normalizer, grad);
  if (grad) {
    std::vector<std::int32_t> tgt(targets.begin(), targets.end());
    std::vector<T> w(weights.begin(), weights.end());
    tape.record([logits, out, probs = std::move(probs), tgt, w, classes, normalizer]() mutable {
      if (!out.has_grad()) return;
      const T g = out.grad()[0] / normalizer;
      auto lg = logits.mutable_grad();
      for (std::size_t r = 0; r < tgt.size(); ++r) {
        if (w[r] == T(0)) continue;
        const T scale = g * w[r];
        for (std::size_t c = 0; c < classes; ++c) {
          const T onehot = static_cast<std::size_t>(tgt[r]) == c ? T(1) : T(0);
          lg[r * classes + c] += scale * (probs[r * classes + c] - onehot);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax_cross_entropy(Tape<T> &tape, const Tensor<T> &logits,
                                std::span<const std::int32_t> targets) {
  require_rank(logits, 2, "softmax_cross_entropy");
  std::vector<T> ones(logits.dim(0), T(1));
  return weighted_softmax_cross_entropy<T>(tape, logits, targets, ones,
                                           static_cast<T>(logits.dim(0)));
}

template <typename T>
Tensor<T> detach(const Tensor<T> &a) {
  if (!a.defined()) return a;
  return Tensor<T>(a.shape(), std::vector<T>(a.values().begin(), a.values().end()), false);
}

}  // namespace ops

template <typename T>
std::vector<T> softmax_rows(const Tensor<T> &logits) {
  if (!logits.defined() || logits.rank() != 2) {
    throw DimensionError("softmax_rows: expected a matrix");
  }
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  std::vector<T> p(logits.size());
  auto lv = logits.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T *row = lv.data() + r * classes;
    const T top = *std::max_element(row, row + classes);
    T z = T(0);
    for (std::size_t c = 0; c < classes; ++c) {
      p[r * classes + c] = std::exp(row[c] - top);
      z += p[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) p[r * classes + c] /= z;
  }
  return p;
}

#define BIMODEL_INSTANTIATE_TENSOR(T)                                                          \
  template class Tensor<T>;                                                                    \
  template class Tape<T>;                                                                      \
  template std::vector<T> softmax_rows<T>(const Tensor<T> &);                                  \
  namespace ops {                                                                              \
  template Tensor<T> matmul<T>(Tape<T> &, const Tensor<T> &, const Tensor<T> &);               \
  template Tensor<T> add<T>(Tape<T> &, const Tensor<T> &, const Tensor<T> &);                  \
  template Tensor<T> mul<T>(Tape<T> &, const Tensor<T> &, const Tensor<T> &);                  \
  template Tensor<T> add_bias<T>(Tape<T> &, const Tensor<T> &, const Tensor<T> &);             \
  template Tensor<T> sigmoid<T>(Tape<T> &, const Tensor<T> &);                                 \
  template Tensor<T> tanh<T>(Tape<T> &, const Tensor<T> &);                                    \
  template Tensor<T> sum<T>(Tape<T> &, const Tensor<T> &);                                     \
  template Tensor<T> concat<T>(Tape<T> &, std::span<const Tensor<T>>, std::size_t);            \
  template Tensor<T> slice<T>(Tape<T> &, const Tensor<T> &, std::size_t, std::size_t,          \
                              std::size_t);                                                    \
  template Tensor<T> reshape<T>(Tape<T> &, const Tensor<T> &, Shape);                          \
  template Tensor<T> stack<T>(Tape<T> &, std::span<const Tensor<T>>);                          \
  template Tensor<T> select<T>(Tape<T> &, const Tensor<T> &, std::size_t);                     \
  template Tensor<T> embedding_lookup<T>(Tape<T> &, const Tensor<T> &,                         \
                                         std::span<const std::int32_t>);                       \
  template Tensor<T> blend_rows<T>(Tape<T> &, std::span<const std::uint8_t>, const Tensor<T> &, \
                                   const Tensor<T> &);                                         \
  template Tensor<T> gather_steps<T>(Tape<T> &, const Tensor<T> &,                             \
                                     std::span<const std::size_t>);                            \
  template Tensor<T> softmax_cross_entropy<T>(Tape<T> &, const Tensor<T> &,                    \
                                              std::span<const std::int32_t>);                  \
  template Tensor<T> weighted_softmax_cross_entropy<T>(                                        \
      Tape<T> &, const Tensor<T> &, std::span<const std::int32_t>, std::span<const T>, T);     \
  template Tensor<T> detach<T>(const Tensor<T> &);                                             \
  }

BIMODEL_INSTANTIATE_TENSOR(float)
BIMODEL_INSTANTIATE_TENSOR(double)

#undef BIMODEL_INSTANTIATE_TENSOR

}  // namespace bimodel
