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

#ifndef BIMODEL_BIMODEL_H_
#define BIMODEL_BIMODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "data.h"
#include "params.h"
#include "rnn.h"
#include "tensor.h"

namespace bimodel {

enum class Variant { kWithDecoder, kWithoutDecoder };

const char *variant_name(Variant variant);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::kWithDecoder;
  std::size_t vocab_size = 0;  // word ids, including PAD and UNK
  std::size_t num_intents = 0;
  std::size_t num_tags = 0;  // slot label ids, including PAD and BOS
  std::size_t hidden_dim = 200;
  std::size_t num_layers = 2;
  std::size_t embed_dim = 300;
  std::size_t label_embed_dim = 50;
  bool tie_embeddings = true;
  // false replaces every cross-network state with zeros (the ablation).
  bool share_states = true;
  std::uint64_t seed = 1;
  // Weights and embeddings start uniform in [-init_range, init_range].
  double init_range = 0.1;

  bool operator==(const ModelConfig &) const = default;
};

// Same architecture and parameter shapes, with cross-network sharing off.
ModelConfig ablate_sharing(ModelConfig config);

// Hidden states exchanged between the two task networks, one
// [seq x batch x 2*hidden] tensor per encoder. Always detached.
template <typename T>
struct SharedStates {
  Tensor<T> intent_states;
  Tensor<T> slot_states;
};

struct Prediction {
  std::int32_t intent = -1;
  std::vector<std::int32_t> tags;  // one per real token
};

// Two task networks, one for intent detection and one for slot filling, each
// a stacked BLSTM (optionally followed by an LSTM decoder) that reads the
// other network's detached hidden states as an extra input.
template <typename T>
class BiModel {
 public:
  explicit BiModel(const ModelConfig &config);

  const ModelConfig &config() const { return config_; }
  std::size_t state_dim() const { return 2 * config_.hidden_dim; }

  // Every parameter exactly once, in a stable order with stable names.
  NamedParams<T> named_parameters() const;
  // Parameters updated by each loss. With tied embeddings the word table is
  // in both lists.
  std::vector<Tensor<T>> intent_parameters() const;
  std::vector<Tensor<T>> slot_parameters() const;
  std::size_t parameter_count() const;

  // Both encoders run with zero cross-network input; results are detached.
  SharedStates<T> compute_shared_states(const Batch &batch) const;
  // The intent encoder's detached states under zero cross-network input.
  Tensor<T> intent_encoder_states(const Batch &batch) const;

  // [batch x num_intents]
  Tensor<T> predict_intent(Tape<T> &tape, const Batch &batch, const SharedStates<T> &shared) const;

  // [seq x batch x num_tags]. With teacher labels (t-major like Batch::tag_ids)
  // the previous-label input is the gold tag; otherwise the greedy choice.
  Tensor<T> predict_slots(Tape<T> &tape, const Batch &batch, const SharedStates<T> &shared,
                          std::optional<std::span<const std::int32_t>> teacher_labels) const;

  // Greedy intent and tags for each row of the batch.
  std::vector<Prediction> predict_batch(const Batch &batch) const;

 private:
  struct IntentNetwork {
    Tensor<T> word_embedding;  // only when untied
    BlstmEncoder<T> encoder;
    std::optional<LstmDecoder<T>> decoder;
    Tensor<T> output_weight;
    Tensor<T> output_bias;
  };
  struct SlotNetwork {
    Tensor<T> word_embedding;  // only when untied
    Tensor<T> label_embedding;
    BlstmEncoder<T> encoder;
    std::optional<LstmDecoder<T>> decoder;
    Tensor<T> output_weight;
    Tensor<T> output_bias;
  };

  const Tensor<T> &intent_words() const;
  const Tensor<T> &slot_words() const;
  std::vector<Tensor<T>> embed(Tape<T> &tape, const Tensor<T> &table, const Batch &batch) const;
  void check_shared(const Batch &batch, const Tensor<T> &states, const char *what) const;
  Tensor<T> run_encoder_detached(const BlstmEncoder<T> &encoder, const Tensor<T> &table,
                                 const Batch &batch) const;

  ModelConfig config_;
  Tensor<T> word_embedding_;  // tied table
  IntentNetwork intent_;
  SlotNetwork slot_;
};

// Cross entropy of one intent per utterance, averaged over the batch.
template <typename T>
Tensor<T> intent_loss(Tape<T> &tape, const Tensor<T> &logits, std::span<const std::int32_t> gold);

// Cross entropy summed over the unmasked steps of each utterance, averaged
// over the batch. logits: [seq x batch x tags]; gold/mask t-major.
template <typename T>
Tensor<T> slot_loss(Tape<T> &tape, const Tensor<T> &logits, std::span<const std::int32_t> gold,
                    std::span<const std::uint8_t> mask);

// Index of the largest entry in each row, restricted to columns >= first.
template <typename T>
std::vector<std::int32_t> argmax_rows(const Tensor<T> &logits, std::size_t first = 0);

}  // namespace bimodel

#endif  // BIMODEL_BIMODEL_H_
