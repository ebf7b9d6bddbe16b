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

#include "bimodel.h"

#include <algorithm>

#include "errors.h"

namespace bimodel {

const char *variant_name(Variant variant) {
  return variant == Variant::kWithDecoder ? "with_decoder" : "without_decoder";
}

Variant parse_variant(std::string_view name) {
  if (name == "with_decoder") return Variant::kWithDecoder;
  if (name == "without_decoder") return Variant::kWithoutDecoder;
  throw UsageError("unknown variant '" + std::string(name) +
                   "' (expected with_decoder or without_decoder)");
}

ModelConfig ablate_sharing(ModelConfig config) {
  config.share_states = false;
  return config;
}

namespace {

template <typename T>
Tensor<T> project_steps(Tape<T> &tape, std::span<const Tensor<T>> states, const Tensor<T> &weight,
                        const Tensor<T> &bias) {
  const std::size_t steps = states.size(), batch = states[0].dim(0);
  Tensor<T> rows = ops::concat<T>(tape, states, 0);
  Tensor<T> logits = ops::add_bias(tape, ops::matmul(tape, rows, weight), bias);
  return ops::reshape(tape, logits, {steps, batch, weight.dim(1)});
}

template <typename T>
Tensor<T> project(Tape<T> &tape, const Tensor<T> &x, const Tensor<T> &weight,
                  const Tensor<T> &bias) {
  return ops::add_bias(tape, ops::matmul(tape, x, weight), bias);
}

// Forward half at each row's last real step joined with the backward half at
// step 0, read from a [seq x batch x 2*hidden] state tensor.
template <typename T>
Tensor<T> summarize(Tape<T> &tape, const Tensor<T> &states, const Batch &batch,
                    std::size_t hidden) {
  std::vector<std::size_t> last(batch.batch_size);
  for (std::size_t b = 0; b < batch.batch_size; ++b) last[b] = batch.lengths[b] - 1;
  Tensor<T> forward = ops::slice(tape, ops::gather_steps(tape, states, last), 1, 0, hidden);
  Tensor<T> backward = ops::slice(tape, ops::select(tape, states, 0), 1, hidden, 2 * hidden);
  return ops::concat(tape, {forward, backward}, 1);
}

}  // namespace

template <typename T>
std::vector<std::int32_t> argmax_rows(const Tensor<T> &logits, std::size_t first) {
  const std::size_t cols = logits.shape().back();
  if (first >= cols) throw IndexError("argmax_rows: no admissible column");
  const std::size_t rows = logits.size() / cols;
  std::vector<std::int32_t> out(rows);
  auto v = logits.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T *row = v.data() + r * cols;
    out[r] = static_cast<std::int32_t>(std::max_element(row + first, row + cols) - row);
  }
  return out;
}

template <typename T>
BiModel<T>::BiModel(const ModelConfig &config) : config_(config) {
  const ModelConfig &c = config_;
  if (c.vocab_size < 2 || c.num_intents == 0 || c.num_tags < 3 || c.hidden_dim == 0 ||
      c.num_layers == 0 || c.embed_dim == 0 || c.label_embed_dim == 0 || !(c.init_range > 0.0)) {
    throw UsageError("invalid model dimensions");
  }
  ParamInitializer init(c.seed, c.init_range);
  const std::size_t H = c.hidden_dim;
  const bool decoders = c.variant == Variant::kWithDecoder;

  if (c.tie_embeddings) word_embedding_ = init.uniform<T>({c.vocab_size, c.embed_dim});

  if (!c.tie_embeddings) intent_.word_embedding = init.uniform<T>({c.vocab_size, c.embed_dim});
  intent_.encoder = BlstmEncoder<T>({c.embed_dim, 2 * H, H, c.num_layers, 0}, init);
  if (decoders) intent_.decoder.emplace(typename LstmDecoder<T>::Dims{4 * H, H, c.num_layers}, init);
  intent_.output_weight = init.uniform<T>({decoders ? H : 2 * H, c.num_intents});
  intent_.output_bias = ParamInitializer::constant<T>({c.num_intents}, 0.0);

  if (!c.tie_embeddings) slot_.word_embedding = init.uniform<T>({c.vocab_size, c.embed_dim});
  slot_.label_embedding = init.uniform<T>({c.num_tags, c.label_embed_dim});
  slot_.encoder = BlstmEncoder<T>(
      {c.embed_dim, 2 * H, H, c.num_layers, decoders ? 0 : c.label_embed_dim}, init);
  if (decoders) {
    slot_.decoder.emplace(typename LstmDecoder<T>::Dims{4 * H + c.label_embed_dim, H, c.num_layers},
                          init);
  }
  slot_.output_weight = init.uniform<T>({decoders ? H : 2 * H, c.num_tags});
  slot_.output_bias = ParamInitializer::constant<T>({c.num_tags}, 0.0);
}

template <typename T>
NamedParams<T> BiModel<T>::named_parameters() const {
  NamedParams<T> out;
  if (config_.tie_embeddings) out.emplace_back("embedding/words", word_embedding_);
  if (!config_.tie_embeddings) out.emplace_back("intent/embedding/words", intent_.word_embedding);
  intent_.encoder.collect("intent/encoder", out);
  if (intent_.decoder) intent_.decoder->collect("intent/decoder", out);
  out.emplace_back("intent/output/W", intent_.output_weight);
  out.emplace_back("intent/output/b", intent_.output_bias);

  if (!config_.tie_embeddings) out.emplace_back("slot/embedding/words", slot_.word_embedding);
  out.emplace_back("slot/embedding/labels", slot_.label_embedding);
  slot_.encoder.collect("slot/encoder", out);
  if (slot_.decoder) slot_.decoder->collect("slot/decoder", out);
  out.emplace_back("slot/output/W", slot_.output_weight);
  out.emplace_back("slot/output/b", slot_.output_bias);
  return out;
}

template <typename T>
std::vector<Tensor<T>> BiModel<T>::intent_parameters() const {
  std::vector<Tensor<T>> out;
  for (auto &[name, t] : named_parameters()) {
    if (name.rfind("slot/", 0) != 0) out.push_back(t);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> BiModel<T>::slot_parameters() const {
  std::vector<Tensor<T>> out;
  for (auto &[name, t] : named_parameters()) {
    if (name.rfind("intent/", 0) != 0) out.push_back(t);
  }
  return out;
}

template <typename T>
std::size_t BiModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto &[name, t] : named_parameters()) n += t.size();
  return n;
}

template <typename T>
const Tensor<T> &BiModel<T>::intent_words() const {
  return config_.tie_embeddings ? word_embedding_ : intent_.word_embedding;
}

template <typename T>
const Tensor<T> &BiModel<T>::slot_words() const {
  return config_.tie_embeddings ? word_embedding_ : slot_.word_embedding;
}

template <typename T>
std::vector<Tensor<T>> BiModel<T>::embed(Tape<T> &tape, const Tensor<T> &table,
                                         const Batch &batch) const {
  if (batch.seq_len == 0 || batch.batch_size == 0) throw ContractError("empty batch");
  std::vector<Tensor<T>> steps;
  steps.reserve(batch.seq_len);
  for (std::size_t t = 0; t < batch.seq_len; ++t) {
    steps.push_back(ops::embedding_lookup(tape, table, batch.words_at(t)));
  }
  return steps;
}

template <typename T>
void BiModel<T>::check_shared(const Batch &batch, const Tensor<T> &states,
                              const char *what) const {
  const Shape want{batch.seq_len, batch.batch_size, state_dim()};
  if (!states.defined()) {
    throw ContractError(std::string("missing shared states: ") + what + " not computed");
  }
  if (states.shape() != want) {
    throw ContractError(std::string("shared states: ") + what + " has shape " +
                        shape_string(states.shape()) + ", expected " + shape_string(want));
  }
}

template <typename T>
Tensor<T> BiModel<T>::run_encoder_detached(const BlstmEncoder<T> &encoder, const Tensor<T> &table,
                                           const Batch &batch) const {
  if (!config_.share_states) {
    return Tensor<T>::zeros({batch.seq_len, batch.batch_size, state_dim()});
  }
  Tape<T> tape(Tape<T>::Mode::kInference);
  std::vector<Tensor<T>> words = embed(tape, table, batch);
  EncoderOutput<T> out = encoder.run(tape, words, {}, batch.lengths);
  return ops::detach(ops::stack<T>(tape, out.states));
}

template <typename T>
SharedStates<T> BiModel<T>::compute_shared_states(const Batch &batch) const {
  if (batch.seq_len == 0 || batch.batch_size == 0) {
    throw ContractError("compute_shared_states: empty batch");
  }
  return {run_encoder_detached(intent_.encoder, intent_words(), batch),
          run_encoder_detached(slot_.encoder, slot_words(), batch)};
}

template <typename T>
Tensor<T> BiModel<T>::intent_encoder_states(const Batch &batch) const {
  return run_encoder_detached(intent_.encoder, intent_words(), batch);
}

template <typename T>
Tensor<T> BiModel<T>::predict_intent(Tape<T> &tape, const Batch &batch,
                                     const SharedStates<T> &shared) const {
  check_shared(batch, shared.slot_states, "slot-network states");
  std::vector<Tensor<T>> words = embed(tape, intent_words(), batch);
  std::vector<Tensor<T>> aux;
  if (config_.share_states) aux = unstack(tape, shared.slot_states);
  EncoderOutput<T> enc = intent_.encoder.run(tape, words, aux, batch.lengths);
  Tensor<T> own = ops::concat(tape, {enc.final_forward, enc.final_backward}, 1);
  if (!intent_.decoder) return project(tape, own, intent_.output_weight, intent_.output_bias);

  Tensor<T> other = config_.share_states
                        ? summarize(tape, shared.slot_states, batch, config_.hidden_dim)
                        : Tensor<T>::zeros({batch.batch_size, state_dim()});
  const LstmDecoder<T> &decoder = *intent_.decoder;
  auto state = decoder.step(tape, ops::concat(tape, {own, other}, 1),
                            decoder.initial_state(batch.batch_size));
  return project(tape, LstmDecoder<T>::output(state), intent_.output_weight, intent_.output_bias);
}

template <typename T>
Tensor<T> BiModel<T>::predict_slots(
    Tape<T> &tape, const Batch &batch, const SharedStates<T> &shared,
    std::optional<std::span<const std::int32_t>> teacher_labels) const {
  check_shared(batch, shared.intent_states, "intent-network states");
  const std::size_t steps = batch.seq_len, rows = batch.batch_size;
  if (teacher_labels && teacher_labels->size() != steps * rows) {
    throw ContractError("predict_slots: " + std::to_string(teacher_labels->size()) +
                        " teacher labels for a " + std::to_string(steps) + "x" +
                        std::to_string(rows) + " batch");
  }
  std::vector<Tensor<T>> words = embed(tape, slot_words(), batch);
  std::vector<Tensor<T>> aux;
  if (config_.share_states) aux = unstack(tape, shared.intent_states);

  // Label fed alongside step t: BOS at t = 0, else the teacher or greedy tag
  // of step t - 1, read off `previous` (the state that step t - 1 projects).
  auto previous_labels = [&](std::size_t t, const Tensor<T> *previous) {
    std::vector<std::int32_t> labels(rows, Vocabulary::kBos);
    if (t == 0) return labels;
    if (teacher_labels) {
      std::copy_n(teacher_labels->begin() + (t - 1) * rows, rows, labels.begin());
    } else {
      labels = argmax_rows(project(tape, *previous, slot_.output_weight, slot_.output_bias),
                           Vocabulary::kBos + 1);
    }
    return labels;
  };

  if (!slot_.decoder) {
    StepFeed<T> feed = [&](std::size_t t, const Tensor<T> *previous) {
      return ops::embedding_lookup<T>(tape, slot_.label_embedding, previous_labels(t, previous));
    };
    EncoderOutput<T> enc = slot_.encoder.run(tape, words, aux, batch.lengths, &feed);
    return project_steps<T>(tape, enc.states, slot_.output_weight, slot_.output_bias);
  }

  EncoderOutput<T> enc = slot_.encoder.run(tape, words, aux, batch.lengths);
  const LstmDecoder<T> &decoder = *slot_.decoder;
  const Tensor<T> zero_other = Tensor<T>::zeros({rows, state_dim()});
  auto state = decoder.initial_state(rows);
  std::vector<Tensor<T>> outputs(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor<T> label = ops::embedding_lookup<T>(tape, slot_.label_embedding,
                                               previous_labels(t, t ? &outputs[t - 1] : nullptr));
    Tensor<T> input =
        ops::concat(tape, {enc.states[t], config_.share_states ? aux[t] : zero_other, label}, 1);
    state = decoder.step(tape, input, state);
    outputs[t] = LstmDecoder<T>::output(state);
  }
  return project_steps<T>(tape, outputs, slot_.output_weight, slot_.output_bias);
}

template <typename T>
std::vector<Prediction> BiModel<T>::predict_batch(const Batch &batch) const {
  Tape<T> tape(Tape<T>::Mode::kInference);
  SharedStates<T> shared = compute_shared_states(batch);
  std::vector<std::int32_t> intents = argmax_rows(predict_intent(tape, batch, shared));
  std::vector<std::int32_t> tags =
      argmax_rows(predict_slots(tape, batch, shared, std::nullopt), Vocabulary::kBos + 1);
  std::vector<Prediction> out(batch.batch_size);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    out[b].intent = intents[b];
    for (std::size_t t = 0; t < batch.lengths[b]; ++t) out[b].tags.push_back(tags[batch.at(t, b)]);
  }
  return out;
}

template <typename T>
Tensor<T> intent_loss(Tape<T> &tape, const Tensor<T> &logits, std::span<const std::int32_t> gold) {
  return ops::softmax_cross_entropy(tape, logits, gold);
}

template <typename T>
Tensor<T> slot_loss(Tape<T> &tape, const Tensor<T> &logits, std::span<const std::int32_t> gold,
                    std::span<const std::uint8_t> mask) {
  if (!logits.defined() || logits.rank() != 3) {
    throw DimensionError("slot_loss: logits must be [seq x batch x tags]");
  }
  const std::size_t steps = logits.dim(0), rows = logits.dim(1), tags = logits.dim(2);
  if (gold.size() != steps * rows || mask.size() != steps * rows) {
    throw DimensionError("slot_loss: gold/mask size does not match logits " +
                         shape_string(logits.shape()));
  }
  std::vector<T> weights(mask.size());
  for (std::size_t b = 0; b < rows; ++b) {
    bool any = false;
    for (std::size_t t = 0; t < steps; ++t) {
      weights[t * rows + b] = mask[t * rows + b] ? T(1) : T(0);
      any = any || mask[t * rows + b];
    }
    if (!any) throw ContractError("slot_loss: utterance " + std::to_string(b) + " is fully masked");
  }
  Tensor<T> flat = ops::reshape(tape, logits, {steps * rows, tags});
  return ops::weighted_softmax_cross_entropy<T>(tape, flat, gold, weights, static_cast<T>(rows));
}

#define BIMODEL_INSTANTIATE_MODEL(T)                                                            \
  template class BiModel<T>;                                                                    \
  template Tensor<T> intent_loss<T>(Tape<T> &, const Tensor<T> &,                               \
                                    std::span<const std::int32_t>);                             \
  template Tensor<T> slot_loss<T>(Tape<T> &, const Tensor<T> &, std::span<const std::int32_t>,  \
                                  std::span<const std::uint8_t>);                               \
  template std::vector<std::int32_t> argmax_rows<T>(const Tensor<T> &, std::size_t);

BIMODEL_INSTANTIATE_MODEL(float)
BIMODEL_INSTANTIATE_MODEL(double)

#undef BIMODEL_INSTANTIATE_MODEL

}  // namespace bimodel
