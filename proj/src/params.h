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

#ifndef BIMODEL_PARAMS_H_
#define BIMODEL_PARAMS_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tensor.h"

namespace bimodel {

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T>>>;

// Seeded source of initial parameter values. Draws are made in double and
// narrowed, so float and double models built from the same seed agree.
class ParamInitializer {
 public:
  static constexpr double kWeightRange = 0.1;

  explicit ParamInitializer(std::uint64_t seed, double range = kWeightRange)
      : rng_(seed), range_(range) {}

  // Uniform in [-range, range].
  template <typename T>
  Tensor<T> uniform(Shape shape) {
    std::uniform_real_distribution<double> dist(-range_, range_);
    std::vector<T> v(numel(shape));
    for (T &x : v) x = static_cast<T>(dist(rng_));
    return Tensor<T>(std::move(shape), std::move(v), true);
  }

  template <typename T>
  static Tensor<T> constant(Shape shape, double value) {
    const std::size_t n = numel(shape);
    return Tensor<T>(std::move(shape), std::vector<T>(n, static_cast<T>(value)), true);
  }

 private:
  std::mt19937_64 rng_;
  double range_;
};

}  // namespace bimodel

#endif  // BIMODEL_PARAMS_H_
