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

#ifndef BIMODEL_RNN_H_
#define BIMODEL_RNN_H_

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "params.h"
#include "tensor.h"

namespace bimodel {

enum class Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCell = 3 };

const char *gate_name(Gate gate);

template <typename T>
struct GateParams {
  Tensor<T> input_weight;      // [input_dim x hidden_dim]
  Tensor<T> recurrent_weight;  // [hidden_dim x hidden_dim]
  Tensor<T> bias;              // [hidden_dim]
};

template <typename T>
struct LstmParams {
  static constexpr double kForgetBias = 1.0;

  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<GateParams<T>, 4> gates;

  static LstmParams create(std::size_t input_dim, std::size_t hidden_dim,
                           ParamInitializer &init);

  const GateParams<T> &gate(Gate g) const { return gates[static_cast<std::size_t>(g)]; }
  GateParams<T> &gate(Gate g) { return gates[static_cast<std::size_t>(g)]; }

  void collect(const std::string &prefix, NamedParams<T> &out) const;
};

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;

  static LstmState zeros(std::size_t batch, std::size_t hidden) {
    return {Tensor<T>::zeros({batch, hidden}), Tensor<T>::zeros({batch, hidden})};
  }
};

// i, f, o = sigmoid(x W + h U + b); g = tanh(...); c' = f*c + i*g;
// h' = o * tanh(c').
template <typename T>
LstmState<T> lstm_step(Tape<T> &tape, const LstmParams<T> &params, const Tensor<T> &x,
                       const LstmState<T> &prev);

// Supplies the extra input of the top forward layer at `step`. The argument is
// the finished top-layer state of the previous step, or null at step 0.
template <typename T>
using StepFeed = std::function<Tensor<T>(std::size_t step, const Tensor<T> *previous_state)>;

template <typename T>
struct EncoderOutput {
  std::vector<Tensor<T>> states;  // per step, [batch x 2*hidden]; zero past each length
  Tensor<T> final_forward;        // forward half at each sequence's last real step
  Tensor<T> final_backward;       // backward half at step 0
};

// Stacked bidirectional LSTM. Layer 0 additionally reads an auxiliary
// sequence: the forward direction at step t sees aux[t-1] and the backward
// direction sees aux[t+1], with zeros past either boundary. The top forward
// layer may read one more per-step input through a StepFeed.
template <typename T>
class BlstmEncoder {
 public:
  struct Dims {
    std::size_t input_dim = 0;
    std::size_t aux_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_layers = 1;
    std::size_t feed_dim = 0;
  };

  struct Layer {
    LstmParams<T> forward;
    LstmParams<T> backward;
  };

  BlstmEncoder() = default;
  BlstmEncoder(const Dims &dims, ParamInitializer &init);

  const Dims &dims() const { return dims_; }
  std::size_t output_dim() const { return 2 * dims_.hidden_dim; }
  const std::vector<Layer> &layers() const { return layers_; }
  std::vector<Layer> &layers() { return layers_; }

  // inputs: per step [batch x input_dim]. aux: empty, or per step
  // [batch x aux_dim]. lengths: empty (all full), or one per batch row.
  EncoderOutput<T> run(Tape<T> &tape, std::span<const Tensor<T>> inputs,
                       std::span<const Tensor<T>> aux, std::span<const std::size_t> lengths,
                       const StepFeed<T> *feed = nullptr) const;

  // Dense form: inputs [seq x batch x input_dim], aux null or
  // [seq x batch x aux_dim]; returns [seq x batch x 2*hidden].
  Tensor<T> forward(Tape<T> &tape, const Tensor<T> &inputs, const Tensor<T> *aux = nullptr) const;

  void collect(const std::string &prefix, NamedParams<T> &out) const;

 private:
  Dims dims_;
  std::vector<Layer> layers_;
};

// Stacked unidirectional LSTM advanced one step at a time.
template <typename T>
class LstmDecoder {
 public:
  using State = std::vector<LstmState<T>>;

  struct Dims {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_layers = 1;
  };

  LstmDecoder() = default;
  LstmDecoder(const Dims &dims, ParamInitializer &init);

  const Dims &dims() const { return dims_; }
  const std::vector<LstmParams<T>> &layers() const { return layers_; }
  std::vector<LstmParams<T>> &layers() { return layers_; }

  State initial_state(std::size_t batch) const;
  State step(Tape<T> &tape, const Tensor<T> &input, const State &previous) const;
  static const Tensor<T> &output(const State &state) { return state.back().h; }

  void collect(const std::string &prefix, NamedParams<T> &out) const;

 private:
  Dims dims_;
  std::vector<LstmParams<T>> layers_;
};

// Splits [seq x batch x dim] into per-step tensors and back.
template <typename T>
std::vector<Tensor<T>> unstack(Tape<T> &tape, const Tensor<T> &x);

}  // namespace bimodel

#endif  // BIMODEL_RNN_H_
