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

#include "trainer.h"

#include <cmath>
#include <tuple>

#include "errors.h"

namespace bimodel {
namespace {

AdamOptions adam_options(const TrainOptions &options) {
  AdamOptions a;
  a.learning_rate = options.learning_rate;
  return a;
}

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  return seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(epoch) + 1));
}

template <typename T>
std::vector<std::vector<T>> snapshot(const BiModel<T> &model) {
  std::vector<std::vector<T>> values;
  for (const auto &[name, t] : model.named_parameters()) {
    values.emplace_back(t.values().begin(), t.values().end());
  }
  return values;
}

template <typename T>
void restore(BiModel<T> &model, const std::vector<std::vector<T>> &values) {
  auto params = model.named_parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].second.mutable_values();
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace

template <typename T>
AsyncTrainer<T>::AsyncTrainer(BiModel<T> &model, const TrainOptions &options)
    : model_(model),
      options_(options),
      intent_opt_(model.intent_parameters(), adam_options(options)),
      slot_opt_(model.slot_parameters(), adam_options(options)) {}

template <typename T>
IterationLosses AsyncTrainer<T>::train_iteration(const Batch &batch) {
  if (batch.batch_size == 0 || batch.seq_len == 0) {
    throw ContractError("train_iteration: empty batch");
  }
  IterationLosses losses;
  SharedStates<T> shared = model_.compute_shared_states(batch);

  {
    intent_opt_.zero_grad();
    Tape<T> tape;
    Tensor<T> loss = intent_loss(tape, model_.predict_intent(tape, batch, shared), batch.intent_ids);
    losses.intent = static_cast<double>(loss.item());
    tape.backward(loss);
    intent_opt_.clip_grad_norm(options_.clip_norm);
    intent_opt_.step();
  }
  if (observer) observer(TrainPhase::kIntentUpdated);

  if (options_.refresh_h1) shared.intent_states = model_.intent_encoder_states(batch);

  {
    slot_opt_.zero_grad();
    Tape<T> tape;
    Tensor<T> logits = model_.predict_slots(tape, batch, shared, batch.tag_ids);
    Tensor<T> loss = slot_loss(tape, logits, batch.tag_ids, batch.mask);
    losses.slot = static_cast<double>(loss.item());
    tape.backward(loss);
    slot_opt_.clip_grad_norm(options_.clip_norm);
    slot_opt_.step();
  }
  if (observer) observer(TrainPhase::kSlotUpdated);
  return losses;
}

template <typename T>
TrainResult train(BiModel<T> &model, const Vocabulary &vocab, std::span<const Utterance> train_set,
                  std::span<const Utterance> dev_set, const TrainOptions &options,
                  const std::function<void(const EpochRecord &)> &on_epoch) {
  if (train_set.empty()) throw ContractError("train: empty training set");
  if (dev_set.empty()) throw ContractError("train: empty dev set");
  if (options.max_epochs == 0) throw UsageError("train: max_epochs must be >= 1");

  AsyncTrainer<T> trainer(model, options);
  TrainResult result;
  result.data_order_fingerprint = 0xcbf29ce484222325ull;
  std::vector<std::vector<T>> best;
  std::tuple<double, double> best_key{-1.0, -1.0};
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    std::vector<Batch> batches =
        make_batches(train_set, vocab, options.batch_size, epoch_seed(options.seed, epoch));
    EpochRecord record;
    record.epoch = epoch;
    for (const Batch &batch : batches) {
      for (std::size_t index : batch.source_index) {
        result.data_order_fingerprint =
            (result.data_order_fingerprint ^ index) * 0x100000001b3ull;
      }
      IterationLosses l = trainer.train_iteration(batch);
      record.intent_loss += l.intent;
      record.slot_loss += l.slot;
    }
    record.intent_loss /= static_cast<double>(batches.size());
    record.slot_loss /= static_cast<double>(batches.size());
    record.dev = evaluate(model, vocab, dev_set, options.scheme);

    const std::tuple<double, double> key{record.dev.slot_f1, record.dev.intent_accuracy};
    record.improved = key > best_key;
    if (record.improved) {
      best_key = key;
      best = snapshot(model);
      result.best_epoch = epoch;
      result.best_dev = record.dev;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);
    if (since_best >= options.patience) break;
  }
  restore(model, best);
  return result;
}

template <typename T>
std::vector<FrameParse> predict_corpus(const BiModel<T> &model, const Vocabulary &vocab,
                                       std::span<const Utterance> corpus,
                                       std::size_t batch_size) {
  std::vector<FrameParse> out(corpus.size());
  if (corpus.empty()) return out;
  for (const Batch &batch : make_batches(corpus, vocab, batch_size)) {
    std::vector<Prediction> preds = model.predict_batch(batch);
    for (std::size_t b = 0; b < preds.size(); ++b) {
      FrameParse &parse = out[batch.source_index[b]];
      parse.intent = vocab.intents.symbol(preds[b].intent);
      for (std::int32_t tag : preds[b].tags) parse.slot_tags.push_back(vocab.tags.symbol(tag));
    }
  }
  return out;
}

template <typename T>
FrameParse predict(const BiModel<T> &model, const Vocabulary &vocab,
                   std::span<const std::string> tokens, const LoadOptions &options) {
  if (tokens.empty()) throw ContractError("predict: empty input");
  Utterance u;
  for (const std::string &tok : tokens) u.tokens.push_back(normalize_token(tok, options));
  u.slot_tags.assign(u.tokens.size(), "O");
  return predict_corpus(model, vocab, std::span<const Utterance>(&u, 1), 1).front();
}

template <typename T>
EvalReport evaluate(const BiModel<T> &model, const Vocabulary &vocab,
                    std::span<const Utterance> corpus, ChunkScheme scheme) {
  if (corpus.empty()) throw ContractError("evaluate: empty dataset");
  std::vector<FrameParse> parses = predict_corpus(model, vocab, corpus);
  std::vector<std::vector<std::string>> gold_tags, pred_tags;
  std::vector<std::string> gold_intents, pred_intents;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    gold_tags.push_back(corpus[i].slot_tags);
    gold_intents.push_back(corpus[i].intent);
    pred_tags.push_back(std::move(parses[i].slot_tags));
    pred_intents.push_back(std::move(parses[i].intent));
  }
  return make_report(gold_tags, pred_tags, gold_intents, pred_intents, scheme);
}

#define BIMODEL_INSTANTIATE_TRAINER(T)                                                         \
  template class AsyncTrainer<T>;                                                              \
  template TrainResult train<T>(BiModel<T> &, const Vocabulary &, std::span<const Utterance>,  \
                                std::span<const Utterance>, const TrainOptions &,              \
                                const std::function<void(const EpochRecord &)> &);             \
  template FrameParse predict<T>(const BiModel<T> &, const Vocabulary &,                       \
                                 std::span<const std::string>, const LoadOptions &);           \
  template std::vector<FrameParse> predict_corpus<T>(const BiModel<T> &, const Vocabulary &,   \
                                                     std::span<const Utterance>, std::size_t); \
  template EvalReport evaluate<T>(const BiModel<T> &, const Vocabulary &,                      \
                                  std::span<const Utterance>, ChunkScheme);

BIMODEL_INSTANTIATE_TRAINER(float)
BIMODEL_INSTANTIATE_TRAINER(double)

#undef BIMODEL_INSTANTIATE_TRAINER

}  // namespace bimodel
