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

#ifndef BIMODEL_TENSOR_H_
#define BIMODEL_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bimodel {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape &shape);
std::string shape_string(const Shape &shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until an adjoint is deposited
  bool requires_grad = false;
};

// Dense row-major array. Copies share storage, like a handle (so mutators are
// const, as on a pointer); use clone() for a deep copy. A default-constructed
// tensor is undefined.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() const { return node_->value; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) const { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  // Allocates a zero gradient buffer when none exists yet.
  std::span<T> mutable_grad() const;
  void zero_grad() const;
  void clear_grad() const { node_->grad.clear(); }

  Tensor clone() const;
  bool same_storage(const Tensor &other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

// Ordered record of differentiable operations. Entries are appended in
// creation order, so replaying them backwards is a valid topological order.
// One tape serves one forward/backward pass; backward() consumes it.
template <typename T>
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }
  std::size_t size() const { return entries_.size(); }

  void record(std::function<void()> adjoint) { entries_.push_back(std::move(adjoint)); }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded adjoint once, newest
  // first. Gradients accumulate into leaves; callers zero them between steps.
  void backward(const Tensor<T> &loss);
  void clear() { entries_.clear(); }

 private:
  Mode mode_;
  std::vector<std::function<void()>> entries_;
};

namespace ops {

template <typename T> Tensor<T> matmul(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> add(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> mul(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &b);
// a[m x n] + bias[n], broadcast over rows.
template <typename T> Tensor<T> add_bias(Tape<T> &tape, const Tensor<T> &a, const Tensor<T> &bias);
template <typename T> Tensor<T> sigmoid(Tape<T> &tape, const Tensor<T> &a);
template <typename T> Tensor<T> tanh(Tape<T> &tape, const Tensor<T> &a);
template <typename T> Tensor<T> sum(Tape<T> &tape, const Tensor<T> &a);

template <typename T>
Tensor<T> concat(Tape<T> &tape, std::span<const Tensor<T>> parts, std::size_t axis);
template <typename T>
Tensor<T> concat(Tape<T> &tape, std::initializer_list<Tensor<T>> parts, std::size_t axis) {
  return concat(tape, std::span<const Tensor<T>>(parts.begin(), parts.size()), axis);
}
template <typename T>
Tensor<T> slice(Tape<T> &tape, const Tensor<T> &a, std::size_t axis, std::size_t begin,
                std::size_t end);
template <typename T> Tensor<T> reshape(Tape<T> &tape, const Tensor<T> &a, Shape shape);
// Stacks equally shaped tensors along a new leading axis.
template <typename T> Tensor<T> stack(Tape<T> &tape, std::span<const Tensor<T>> parts);
// Sub-tensor at `index` along the leading axis.
template <typename T> Tensor<T> select(Tape<T> &tape, const Tensor<T> &a, std::size_t index);

template <typename T>
Tensor<T> embedding_lookup(Tape<T> &tape, const Tensor<T> &table,
                           std::span<const std::int32_t> indices);

// Row b of the result is a[b] where keep[b] != 0, else fallback[b].
template <typename T>
Tensor<T> blend_rows(Tape<T> &tape, std::span<const std::uint8_t> keep, const Tensor<T> &a,
                     const Tensor<T> &fallback);

// From x[steps x batch x dim], picks x[steps_index[b]][b] for every b.
template <typename T>
Tensor<T> gather_steps(Tape<T> &tape, const Tensor<T> &x,
                       std::span<const std::size_t> step_index);

// Mean over rows of -log softmax(logits)[target].
template <typename T>
Tensor<T> softmax_cross_entropy(Tape<T> &tape, const Tensor<T> &logits,
                                std::span<const std::int32_t> targets);

// sum_r weight[r] * -log softmax(logits[r])[target[r]] / normalizer. Rows with
// zero weight may carry any target.
template <typename T>
Tensor<T> weighted_softmax_cross_entropy(Tape<T> &tape, const Tensor<T> &logits,
                                         std::span<const std::int32_t> targets,
                                         std::span<const T> weights, T normalizer);

// Value copy with no tape history.
template <typename T> Tensor<T> detach(const Tensor<T> &a);

}  // namespace ops

// Row-wise softmax of a [rows x cols] value buffer (no tape).
template <typename T> std::vector<T> softmax_rows(const Tensor<T> &logits);

}  // namespace bimodel

#endif  // BIMODEL_TENSOR_H_
