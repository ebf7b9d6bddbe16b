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

#ifndef BIMODEL_ADAM_H_
#define BIMODEL_ADAM_H_

#include <cstdint>
#include <vector>

#include "tensor.h"

namespace bimodel {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over a fixed parameter list. Moment buffers are
// indexed like the parameter list and shaped like each parameter.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamOptions options = {});

  // One update from the gradients currently held by the parameters. Throws
  // ContractError if any parameter has no gradient buffer.
  void step();

  void zero_grad();

  // Rescales all gradients so their joint L2 norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  std::uint64_t steps() const { return steps_; }
  const AdamOptions &options() const { return options_; }
  const std::vector<Tensor<T>> &parameters() const { return params_; }
  const std::vector<T> &first_moment(std::size_t i) const { return m_.at(i); }
  const std::vector<T> &second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<Tensor<T>> params_;
  AdamOptions options_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::uint64_t steps_ = 0;
};

}  // namespace bimodel

#endif  // BIMODEL_ADAM_H_
