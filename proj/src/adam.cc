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

#include "adam.h"

#include <cmath>

#include "errors.h"

namespace bimodel {

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor<T> &p : params_) {
    if (!p.defined()) throw ContractError("Adam: undefined parameter");
    m_.emplace_back(p.size(), T(0));
    v_.emplace_back(p.size(), T(0));
  }
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) {
      throw ContractError("Adam: parameter " + std::to_string(i) + " has no gradient");
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const T b1 = static_cast<T>(options_.beta1);
  const T b2 = static_cast<T>(options_.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(options_.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(options_.beta2, t));
  const T lr = static_cast<T>(options_.learning_rate);
  const T eps = static_cast<T>(options_.epsilon);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].mutable_values();
    auto g = params_[i].grad();
    auto &m = m_[i];
    auto &v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const T m_hat = m[j] / correction1;
      const T v_hat = v[j] / correction2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (Tensor<T> &p : params_) p.zero_grad();
}

template <typename T>
double Adam<T>::clip_grad_norm(double max_norm) {
  double sq = 0.0;
  for (const Tensor<T> &p : params_) {
    for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (Tensor<T> &p : params_) {
      if (!p.has_grad()) continue;
      for (T &g : p.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace bimodel
