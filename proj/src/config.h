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

#ifndef BIMODEL_CONFIG_H_
#define BIMODEL_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bimodel.h"
#include "data.h"
#include "metrics.h"
#include "trainer.h"

namespace bimodel {

// Flat `key = value` lines; `#` starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  const std::string &source);

struct RunConfig {
  Variant variant = Variant::kWithDecoder;
  std::size_t hidden_dim = 200;
  std::size_t num_layers = 2;
  std::size_t embed_dim = 300;
  std::size_t label_embed_dim = 50;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  double init_range = 0.1;
  double clip_norm = 5.0;
  bool tie_embeddings = true;
  bool refresh_h1 = true;
  bool share_states = true;
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string checkpoint_path;
  std::string log_path;  // defaults to <checkpoint>.log.jsonl
  std::string format;    // conll | jsonl | empty (guess from extension)
  std::size_t dev_split = 500;
  bool normalize_digits = false;
  std::size_t min_freq = 1;
  bool strict_chunks = false;
  // Compare split sizes and label counts with canonical ATIS and warn.
  bool atis_checks = true;

  // Keys explicitly assigned through set().
  std::set<std::string> assigned;

  // Every key, in the order to_text() writes them.
  static const std::vector<std::string> &keys();

  // Accepts snake_case or kebab-case keys. UsageError on unknown keys or
  // unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  void apply_text(std::string_view text, const std::string &source);
  // Relative *_path values are resolved against the file's directory.
  void apply_file(const std::string &path);
  // Uses BIMODEL_SEED when no seed was assigned explicitly.
  void apply_seed_fallback();

  std::string to_text() const;

  ModelConfig model_config(const Vocabulary &vocab) const;
  TrainOptions train_options() const;
  LoadOptions load_options() const;
  ChunkScheme chunk_scheme() const;
  CorpusFormat format_for(const std::string &path) const;
  std::string effective_log_path() const;
};

std::string model_config_to_text(const ModelConfig &config);
ModelConfig model_config_from_text(std::string_view text);

}  // namespace bimodel

#endif  // BIMODEL_CONFIG_H_
