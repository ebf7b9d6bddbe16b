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

#include "metrics.h"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>

#include "errors.h"

namespace bimodel {
namespace {

struct ParsedTag {
  char prefix;  // 'B', 'I' or 'O'
  std::string_view type;
};

ParsedTag parse_tag(const std::string &tag) {
  if (tag.size() > 2 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I')) {
    return {tag[0], std::string_view(tag).substr(2)};
  }
  return {'O', {}};
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<Chunk> extract_chunks(std::span<const std::string> tags, ChunkScheme scheme) {
  std::vector<Chunk> chunks;
  std::optional<Chunk> open;
  auto close = [&](std::size_t last) {
    if (!open) return;
    open->end = last;
    chunks.push_back(std::move(*open));
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const ParsedTag tag = parse_tag(tags[i]);
    const bool continues = tag.prefix == 'I' && open && open->type == tag.type;
    if (continues) continue;
    close(i - (i ? 1 : 0));
    const bool starts =
        tag.prefix == 'B' || (tag.prefix == 'I' && scheme == ChunkScheme::kConlleval);
    if (starts) open = Chunk{std::string(tag.type), i, i};
  }
  if (!tags.empty()) close(tags.size() - 1);
  return chunks;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

SlotScores slot_f1(std::span<const std::vector<std::string>> gold,
                   std::span<const std::vector<std::string>> predicted, ChunkScheme scheme) {
  if (gold.size() != predicted.size()) {
    throw ContractError("slot_f1: " + std::to_string(gold.size()) + " gold sequences vs " +
                        std::to_string(predicted.size()) + " predicted");
  }
  SlotScores s;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    if (gold[u].size() != predicted[u].size()) {
      throw ContractError("slot_f1: utterance " + std::to_string(u) + " has " +
                          std::to_string(gold[u].size()) + " gold tags vs " +
                          std::to_string(predicted[u].size()) + " predicted");
    }
    std::vector<Chunk> g = extract_chunks(gold[u], scheme);
    std::vector<Chunk> p = extract_chunks(predicted[u], scheme);
    s.gold += g.size();
    s.predicted += p.size();
    // Both lists are ordered by start and non-overlapping.
    std::size_t i = 0, j = 0;
    while (i < g.size() && j < p.size()) {
      if (g[i] == p[j]) {
        ++s.true_positive;
        ++i;
        ++j;
      } else if (g[i].start < p[j].start || (g[i].start == p[j].start && g[i].end < p[j].end)) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  s.precision = percent(s.true_positive, s.predicted);
  s.recall = percent(s.true_positive, s.gold);
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> predicted) {
  if (gold.size() != predicted.size()) {
    throw ContractError("intent_accuracy: " + std::to_string(gold.size()) + " gold labels vs " +
                        std::to_string(predicted.size()) + " predicted");
  }
  if (gold.empty()) throw ContractError("intent_accuracy: empty label lists");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == predicted[i];
  return percent(correct, gold.size());
}

EvalReport make_report(std::span<const std::vector<std::string>> gold_tags,
                       std::span<const std::vector<std::string>> predicted_tags,
                       std::span<const std::string> gold_intents,
                       std::span<const std::string> predicted_intents, ChunkScheme scheme) {
  const SlotScores slots = slot_f1(gold_tags, predicted_tags, scheme);
  EvalReport r;
  r.slot_precision = slots.precision;
  r.slot_recall = slots.recall;
  r.slot_f1 = slots.f1;
  r.true_positive_chunks = slots.true_positive;
  r.predicted_chunks = slots.predicted;
  r.gold_chunks = slots.gold;
  r.intent_accuracy = intent_accuracy(gold_intents, predicted_intents);
  r.intent_total = gold_intents.size();
  for (std::size_t i = 0; i < gold_intents.size(); ++i) {
    r.intent_correct += gold_intents[i] == predicted_intents[i];
    ++r.intent_confusion[gold_intents[i]][predicted_intents[i]];
  }
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json confusion = nlohmann::json::object();
  for (const auto &[gold, row] : intent_confusion) {
    for (const auto &[pred, count] : row) confusion[gold][pred] = count;
  }
  return {
      {"slot_precision", slot_precision},
      {"slot_recall", slot_recall},
      {"slot_f1", slot_f1},
      {"intent_accuracy", intent_accuracy},
      {"true_positive_chunks", true_positive_chunks},
      {"predicted_chunks", predicted_chunks},
      {"gold_chunks", gold_chunks},
      {"intent_correct", intent_correct},
      {"intent_total", intent_total},
      {"intent_confusion", confusion},
  };
}

EvalReport EvalReport::from_json(const nlohmann::json &j) {
  EvalReport r;
  j.at("slot_precision").get_to(r.slot_precision);
  j.at("slot_recall").get_to(r.slot_recall);
  j.at("slot_f1").get_to(r.slot_f1);
  j.at("intent_accuracy").get_to(r.intent_accuracy);
  j.at("true_positive_chunks").get_to(r.true_positive_chunks);
  j.at("predicted_chunks").get_to(r.predicted_chunks);
  j.at("gold_chunks").get_to(r.gold_chunks);
  j.at("intent_correct").get_to(r.intent_correct);
  j.at("intent_total").get_to(r.intent_total);
  for (const auto &[gold, row] : j.at("intent_confusion").items()) {
    for (const auto &[pred, count] : row.items()) {
      r.intent_confusion[gold][pred] = count.get<std::size_t>();
    }
  }
  return r;
}

std::string EvalReport::to_table() const {
  char line[160];
  std::ostringstream out;
  std::snprintf(line, sizeof line, "%-22s %10s\n", "metric", "value");
  out << line;
  std::snprintf(line, sizeof line, "%-22s %10.2f\n", "slot precision (%)", slot_precision);
  out << line;
  std::snprintf(line, sizeof line, "%-22s %10.2f\n", "slot recall (%)", slot_recall);
  out << line;
  std::snprintf(line, sizeof line, "%-22s %10.2f\n", "slot F1 (%)", slot_f1);
  out << line;
  std::snprintf(line, sizeof line, "%-22s %10.2f\n", "intent accuracy (%)", intent_accuracy);
  out << line;
  std::snprintf(line, sizeof line, "%-22s %4zu/%zu/%zu\n", "chunks tp/pred/gold",
                true_positive_chunks, predicted_chunks, gold_chunks);
  out << line;
  std::snprintf(line, sizeof line, "%-22s %6zu/%zu\n", "intents correct", intent_correct,
                intent_total);
  out << line;
  return out.str();
}

}  // namespace bimodel
