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

#ifndef BIMODEL_METRICS_H_
#define BIMODEL_METRICS_H_

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace bimodel {

struct Chunk {
  std::string type;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  auto operator<=>(const Chunk &) const = default;
};

// kConlleval: an I-X that does not continue an open X chunk starts a new one.
// kStrict: such an I-X belongs to no chunk.
enum class ChunkScheme { kConlleval, kStrict };

std::vector<Chunk> extract_chunks(std::span<const std::string> tags,
                                  ChunkScheme scheme = ChunkScheme::kConlleval);

struct SlotScores {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positive = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

double f1_score(double precision, double recall);

// Micro-averaged chunk precision/recall/F1 in percent.
SlotScores slot_f1(std::span<const std::vector<std::string>> gold,
                   std::span<const std::vector<std::string>> predicted,
                   ChunkScheme scheme = ChunkScheme::kConlleval);

// Exact-match percentage.
double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> predicted);

struct EvalReport {
  double slot_precision = 0.0;
  double slot_recall = 0.0;
  double slot_f1 = 0.0;
  double intent_accuracy = 0.0;
  std::size_t true_positive_chunks = 0;
  std::size_t predicted_chunks = 0;
  std::size_t gold_chunks = 0;
  std::size_t intent_correct = 0;
  std::size_t intent_total = 0;
  std::map<std::string, std::map<std::string, std::size_t>> intent_confusion;  // gold -> predicted

  bool operator==(const EvalReport &) const = default;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json &j);
  std::string to_table() const;
};

EvalReport make_report(std::span<const std::vector<std::string>> gold_tags,
                       std::span<const std::vector<std::string>> predicted_tags,
                       std::span<const std::string> gold_intents,
                       std::span<const std::string> predicted_intents,
                       ChunkScheme scheme = ChunkScheme::kConlleval);

}  // namespace bimodel

#endif  // BIMODEL_METRICS_H_
