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

#ifndef BIMODEL_TRAINER_H_
#define BIMODEL_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adam.h"
#include "bimodel.h"
#include "data.h"
#include "metrics.h"

namespace bimodel {

struct TrainOptions {
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  // Recompute the intent states after the intent update and before the slot
  // pass (otherwise the slot pass reuses the pre-update states).
  bool refresh_h1 = true;
  std::uint64_t seed = 1;
  ChunkScheme scheme = ChunkScheme::kConlleval;
};

struct IterationLosses {
  double intent = 0.0;
  double slot = 0.0;
};

enum class TrainPhase { kIntentUpdated, kSlotUpdated };

// Alternating updates of the two task networks, each with its own Adam state
// and its own loss, exchanging only detached hidden states.
template <typename T>
class AsyncTrainer {
 public:
  AsyncTrainer(BiModel<T> &model, const TrainOptions &options);

  IterationLosses train_iteration(const Batch &batch);

  Adam<T> &intent_optimizer() { return intent_opt_; }
  Adam<T> &slot_optimizer() { return slot_opt_; }

  // Called after each of the two updates inside train_iteration.
  std::function<void(TrainPhase)> observer;

 private:
  BiModel<T> &model_;
  TrainOptions options_;
  Adam<T> intent_opt_;
  Adam<T> slot_opt_;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double intent_loss = 0.0;  // mean over the epoch's iterations
  double slot_loss = 0.0;
  EvalReport dev;
  bool improved = false;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  EvalReport best_dev;
  // FNV-1a over the corpus positions in the order training visited them.
  std::uint64_t data_order_fingerprint = 0;
};

// Epoch loop with per-epoch dev evaluation and early stopping on
// (slot F1, intent accuracy). Leaves the model holding the best parameters.
template <typename T>
TrainResult train(BiModel<T> &model, const Vocabulary &vocab, std::span<const Utterance> train_set,
                  std::span<const Utterance> dev_set, const TrainOptions &options,
                  const std::function<void(const EpochRecord &)> &on_epoch = {});

struct FrameParse {
  std::string intent;
  std::vector<std::string> slot_tags;

  bool operator==(const FrameParse &) const = default;
};

template <typename T>
FrameParse predict(const BiModel<T> &model, const Vocabulary &vocab,
                   std::span<const std::string> tokens, const LoadOptions &options = {});

// Predictions in corpus order.
template <typename T>
std::vector<FrameParse> predict_corpus(const BiModel<T> &model, const Vocabulary &vocab,
                                       std::span<const Utterance> corpus,
                                       std::size_t batch_size = 32);

template <typename T>
EvalReport evaluate(const BiModel<T> &model, const Vocabulary &vocab,
                    std::span<const Utterance> corpus,
                    ChunkScheme scheme = ChunkScheme::kConlleval);

}  // namespace bimodel

#endif  // BIMODEL_TRAINER_H_
