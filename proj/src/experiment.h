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

#ifndef BIMODEL_EXPERIMENT_H_
#define BIMODEL_EXPERIMENT_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bimodel.h"
#include "config.h"
#include "data.h"
#include "json.hpp"
#include "metrics.h"
#include "trainer.h"

namespace bimodel {

// Receives one JSON record per log line.
using LogSink = std::function<void(const nlohmann::json &)>;

struct Datasets {
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;  // empty without test_path
  std::vector<std::string> warnings;
};

// Dev comes from dev_path, else the last dev_split training utterances, else
// (dev_split = 0) the training set itself.
Datasets load_datasets(const RunConfig &config);

struct TrainOutcome {
  std::unique_ptr<BiModel<float>> model;
  Vocabulary vocab;
  TrainResult result;
  std::optional<EvalReport> test;
};

TrainOutcome run_training(const RunConfig &config, const Datasets &data, const LogSink &log);

// Full train command: loads data, trains, writes the checkpoint, the
// effective config (<checkpoint>.config) and the JSONL log. Returns the
// final summary record.
nlohmann::json train_and_save(const RunConfig &config, const LogSink &echo = {});

struct AblationRow {
  std::string name;  // "shared" or "ablated"
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> dev;
  std::vector<EvalReport> test;  // empty without test data
  std::vector<std::uint64_t> data_order;

  double mean_dev_f1() const;
  double mean_dev_accuracy() const;
  double mean_test_f1() const;
  double mean_test_accuracy() const;
};

// Trains the configured model and its zero-sharing twin on the same data
// order for each of num_seeds consecutive seeds.
std::vector<AblationRow> run_ablation(const RunConfig &config, std::size_t num_seeds,
                                      const LogSink &log = {});
nlohmann::json ablation_to_json(const std::vector<AblationRow> &rows);
std::string ablation_table(const std::vector<AblationRow> &rows);

}  // namespace bimodel

#endif  // BIMODEL_EXPERIMENT_H_
