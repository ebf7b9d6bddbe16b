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

#include "rnn.h"

#include <algorithm>

#include "errors.h"

namespace bimodel {

const char *gate_name(Gate gate) {
  switch (gate) {
    case Gate::kInput: return "input_gate";
    case Gate::kForget: return "forget_gate";
    case Gate::kOutput: return "output_gate";
    case Gate::kCell: return "cell";
  }
  return "?";
}

namespace {

constexpr std::array<Gate, 4> kGates = {Gate::kInput, Gate::kForget, Gate::kOutput, Gate::kCell};

template <typename T>
void check_rows(const Tensor<T> &t, std::size_t cols, const char *what) {
  if (!t.defined() || t.rank() != 2 || t.dim(1) != cols) {
    throw DimensionError(std::string("lstm_step: ") + what + " has shape " +
                         (t.defined() ? shape_string(t.shape()) : "undefined") +
                         ", expected [batch x " + std::to_string(cols) + "]");
  }
}

std::vector<std::uint8_t> keep_flags(std::span<const std::size_t> lengths, std::size_t step,
                                     std::size_t batch, bool *all) {
  std::vector<std::uint8_t> keep(batch, 1);
  *all = true;
  if (lengths.empty()) return keep;
  for (std::size_t b = 0; b < batch; ++b) {
    keep[b] = step < lengths[b] ? 1 : 0;
    if (!keep[b]) *all = false;
  }
  return keep;
}

template <typename T>
LstmState<T> masked_step(Tape<T> &tape, const LstmParams<T> &params, const Tensor<T> &x,
                         const LstmState<T> &prev, std::span<const std::uint8_t> keep,
                         bool all_kept) {
  LstmState<T> next = lstm_step(tape, params, x, prev);
  if (all_kept) return next;
  return {ops::blend_rows(tape, keep, next.h, prev.h), ops::blend_rows(tape, keep, next.c, prev.c)};
}

}  // namespace

template <typename T>
LstmParams<T> LstmParams<T>::create(std::size_t input_dim, std::size_t hidden_dim,
                                    ParamInitializer &init) {
  if (input_dim == 0 || hidden_dim == 0) {
    throw DimensionError("LstmParams: dimensions must be positive");
  }
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  for (Gate g : kGates) {
    GateParams<T> &gp = p.gate(g);
    gp.input_weight = init.uniform<T>({input_dim, hidden_dim});
    gp.recurrent_weight = init.uniform<T>({hidden_dim, hidden_dim});
    gp.bias = ParamInitializer::constant<T>({hidden_dim}, g == Gate::kForget ? kForgetBias : 0.0);
  }
  return p;
}

template <typename T>
void LstmParams<T>::collect(const std::string &prefix, NamedParams<T> &out) const {
  for (Gate g : kGates) {
    const std::string base = prefix + "/" + gate_name(g);
    out.emplace_back(base + "/W", gate(g).input_weight);
    out.emplace_back(base + "/U", gate(g).recurrent_weight);
    out.emplace_back(base + "/b", gate(g).bias);
  }
}

template <typename T>
LstmState<T> lstm_step(Tape<T> &tape, const LstmParams<T> &params, const Tensor<T> &x,
                       const LstmState<T> &prev) {
  check_rows(x, params.input_dim, "input");
  check_rows(prev.h, params.hidden_dim, "previous hidden state");
  check_rows(prev.c, params.hidden_dim, "previous cell state");
  if (x.dim(0) != prev.h.dim(0) || x.dim(0) != prev.c.dim(0)) {
    throw DimensionError("lstm_step: batch sizes differ between input " + shape_string(x.shape()) +
                         " and state " + shape_string(prev.h.shape()));
  }
  auto pre_activation = [&](Gate g) {
    const GateParams<T> &gp = params.gate(g);
    Tensor<T> z = ops::add(tape, ops::matmul(tape, x, gp.input_weight),
                           ops::matmul(tape, prev.h, gp.recurrent_weight));
    return ops::add_bias(tape, z, gp.bias);
  };
  Tensor<T> i = ops::sigmoid(tape, pre_activation(Gate::kInput));
  Tensor<T> f = ops::sigmoid(tape, pre_activation(Gate::kForget));
  Tensor<T> o = ops::sigmoid(tape, pre_activation(Gate::kOutput));
  Tensor<T> g = ops::tanh(tape, pre_activation(Gate::kCell));
  Tensor<T> c = ops::add(tape, ops::mul(tape, f, prev.c), ops::mul(tape, i, g));
  Tensor<T> h = ops::mul(tape, o, ops::tanh(tape, c));
  return {h, c};
}

template <typename T>
BlstmEncoder<T>::BlstmEncoder(const Dims &dims, ParamInitializer &init) : dims_(dims) {
  if (dims.num_layers == 0) throw ContractError("BlstmEncoder: needs at least one layer");
  for (std::size_t l = 0; l < dims.num_layers; ++l) {
    const std::size_t in = l == 0 ? dims.input_dim + dims.aux_dim : 2 * dims.hidden_dim;
    const bool top = l + 1 == dims.num_layers;
    Layer layer;
    layer.forward = LstmParams<T>::create(in + (top ? dims.feed_dim : 0), dims.hidden_dim, init);
    layer.backward = LstmParams<T>::create(in, dims.hidden_dim, init);
    layers_.push_back(std::move(layer));
  }
}

template <typename T>
EncoderOutput<T> BlstmEncoder<T>::run(Tape<T> &tape, std::span<const Tensor<T>> inputs,
                                      std::span<const Tensor<T>> aux,
                                      std::span<const std::size_t> lengths,
                                      const StepFeed<T> *feed) const {
  const std::size_t n = inputs.size();
  if (n == 0) throw ContractError("blstm_forward: sequence length 0");
  const std::size_t batch = inputs[0].dim(0);
  const std::size_t hidden = dims_.hidden_dim;
  if (!aux.empty() && aux.size() != n) {
    throw DimensionError("blstm_forward: aux has " + std::to_string(aux.size()) +
                         " steps, inputs have " + std::to_string(n));
  }
  if (!lengths.empty()) {
    if (lengths.size() != batch) throw DimensionError("blstm_forward: one length per batch row");
    for (std::size_t len : lengths) {
      if (len == 0 || len > n) throw ContractError("blstm_forward: sequence length out of range");
    }
  }

  std::vector<std::vector<std::uint8_t>> keep(n);
  std::vector<char> all_kept(n);
  for (std::size_t t = 0; t < n; ++t) {
    bool all = true;
    keep[t] = keep_flags(lengths, t, batch, &all);
    all_kept[t] = all;
  }

  const Tensor<T> zero_aux =
      dims_.aux_dim ? Tensor<T>::zeros({batch, dims_.aux_dim}) : Tensor<T>();
  auto aux_at = [&](std::ptrdiff_t t) -> const Tensor<T> & {
    if (aux.empty() || t < 0 || t >= static_cast<std::ptrdiff_t>(n)) return zero_aux;
    return aux[t];
  };
  auto layer0_input = [&](std::size_t t, std::ptrdiff_t aux_step) {
    if (dims_.aux_dim == 0) return inputs[t];
    return ops::concat(tape, {inputs[t], aux_at(aux_step)}, 1);
  };

  const Tensor<T> zero_state = Tensor<T>::zeros({batch, 2 * hidden});
  EncoderOutput<T> out;
  std::vector<Tensor<T>> below;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer &layer = layers_[l];
    const bool top = l + 1 == layers_.size();

    std::vector<Tensor<T>> backward_h(n);
    LstmState<T> state = LstmState<T>::zeros(batch, hidden);
    for (std::size_t s = n; s-- > 0;) {
      Tensor<T> x = l == 0 ? layer0_input(s, static_cast<std::ptrdiff_t>(s) + 1) : below[s];
      state = masked_step(tape, layer.backward, x, state, keep[s], all_kept[s]);
      backward_h[s] = state.h;
    }

    std::vector<Tensor<T>> forward_h(n);
    std::vector<Tensor<T>> states(n);
    state = LstmState<T>::zeros(batch, hidden);
    const Tensor<T> zero_feed =
        top && dims_.feed_dim ? Tensor<T>::zeros({batch, dims_.feed_dim}) : Tensor<T>();
    for (std::size_t t = 0; t < n; ++t) {
      Tensor<T> x = l == 0 ? layer0_input(t, static_cast<std::ptrdiff_t>(t) - 1) : below[t];
      if (top && dims_.feed_dim) {
        Tensor<T> extra = feed && *feed ? (*feed)(t, t ? &states[t - 1] : nullptr) : zero_feed;
        x = ops::concat(tape, {x, extra}, 1);
      }
      state = masked_step(tape, layer.forward, x, state, keep[t], all_kept[t]);
      forward_h[t] = state.h;
      Tensor<T> joined = ops::concat(tape, {forward_h[t], backward_h[t]}, 1);
      states[t] = all_kept[t] ? joined : ops::blend_rows(tape, keep[t], joined, zero_state);
    }
    if (top) {
      out.final_forward = forward_h[n - 1];
      out.final_backward = backward_h[0];
    }
    below = std::move(states);
  }
  out.states = std::move(below);
  return out;
}

template <typename T>
std::vector<Tensor<T>> unstack(Tape<T> &tape, const Tensor<T> &x) {
  if (!x.defined() || x.rank() != 3) {
    throw DimensionError("expected a [seq x batch x dim] tensor, got " +
                         (x.defined() ? shape_string(x.shape()) : std::string("undefined")));
  }
  std::vector<Tensor<T>> steps;
  steps.reserve(x.dim(0));
  for (std::size_t t = 0; t < x.dim(0); ++t) steps.push_back(ops::select(tape, x, t));
  return steps;
}

template <typename T>
Tensor<T> BlstmEncoder<T>::forward(Tape<T> &tape, const Tensor<T> &inputs,
                                   const Tensor<T> *aux) const {
  if (!inputs.defined() || inputs.rank() != 3 || inputs.dim(0) == 0) {
    throw ContractError("blstm_forward: inputs must be a non-empty [seq x batch x dim] tensor");
  }
  if (inputs.dim(2) != dims_.input_dim) {
    throw DimensionError("blstm_forward: input width " + std::to_string(inputs.dim(2)) +
                         " != " + std::to_string(dims_.input_dim));
  }
  std::vector<Tensor<T>> xs = unstack(tape, inputs);
  std::vector<Tensor<T>> as;
  if (aux) {
    if (aux->rank() != 3 || aux->dim(0) != inputs.dim(0) || aux->dim(1) != inputs.dim(1) ||
        aux->dim(2) != dims_.aux_dim) {
      throw DimensionError("blstm_forward: aux shape " + shape_string(aux->shape()) +
                           " incompatible with inputs " + shape_string(inputs.shape()));
    }
    as = unstack(tape, *aux);
  }
  EncoderOutput<T> out = run(tape, xs, as, {});
  return ops::stack<T>(tape, out.states);
}

template <typename T>
void BlstmEncoder<T>::collect(const std::string &prefix, NamedParams<T> &out) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string base = prefix + "/layer" + std::to_string(l);
    layers_[l].forward.collect(base + "/forward", out);
    layers_[l].backward.collect(base + "/backward", out);
  }
}

template <typename T>
LstmDecoder<T>::LstmDecoder(const Dims &dims, ParamInitializer &init) : dims_(dims) {
  if (dims.num_layers == 0) throw ContractError("LstmDecoder: needs at least one layer");
  for (std::size_t l = 0; l < dims.num_layers; ++l) {
    layers_.push_back(
        LstmParams<T>::create(l == 0 ? dims.input_dim : dims.hidden_dim, dims.hidden_dim, init));
  }
}

template <typename T>
typename LstmDecoder<T>::State LstmDecoder<T>::initial_state(std::size_t batch) const {
  return State(layers_.size(), LstmState<T>::zeros(batch, dims_.hidden_dim));
}

template <typename T>
typename LstmDecoder<T>::State LstmDecoder<T>::step(Tape<T> &tape, const Tensor<T> &input,
                                                    const State &previous) const {
  if (previous.size() != layers_.size()) {
    throw DimensionError("decoder_step: state has " + std::to_string(previous.size()) +
                         " layers, decoder has " + std::to_string(layers_.size()));
  }
  State next;
  next.reserve(layers_.size());
  const Tensor<T> *x = &input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    next.push_back(lstm_step(tape, layers_[l], *x, previous[l]));
    x = &next.back().h;
  }
  return next;
}

template <typename T>
void LstmDecoder<T>::collect(const std::string &prefix, NamedParams<T> &out) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].collect(prefix + "/layer" + std::to_string(l), out);
  }
}

#define BIMODEL_INSTANTIATE_RNN(T)                                                            \
  template struct LstmParams<T>;                                                              \
  template LstmState<T> lstm_step<T>(Tape<T> &, const LstmParams<T> &, const Tensor<T> &,     \
                                     const LstmState<T> &);                                   \
  template class BlstmEncoder<T>;                                                             \
  template class LstmDecoder<T>;                                                              \
  template std::vector<Tensor<T>> unstack<T>(Tape<T> &, const Tensor<T> &);

BIMODEL_INSTANTIATE_RNN(float)
BIMODEL_INSTANTIATE_RNN(double)

#undef BIMODEL_INSTANTIATE_RNN

}  // namespace bimodel
