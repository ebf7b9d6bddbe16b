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

#include "experiment.h"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "checkpoint.h"
#include "errors.h"

namespace bimodel {
namespace {

nlohmann::json config_json(const RunConfig &config) {
  nlohmann::json j = nlohmann::json::object();
  for (const std::string &key : RunConfig::keys()) j[key] = config.get(key);
  return j;
}

double mean_of(const std::vector<EvalReport> &reports, double EvalReport::*field) {
  if (reports.empty()) return 0.0;
  double sum = 0.0;
  for (const EvalReport &r : reports) sum += r.*field;
  return sum / static_cast<double>(reports.size());
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("cannot write '" + path + "'");
}

}  // namespace

Datasets load_datasets(const RunConfig &config) {
  if (config.train_path.empty()) throw UsageError("train_path is not set");
  const LoadOptions options = config.load_options();
  Datasets d;
  std::vector<Utterance> train =
      load_corpus(config.train_path, config.format_for(config.train_path), options);
  const std::size_t full_train = train.size();
  // Label counts refer to the whole training file, before any dev split.
  std::size_t full_intents = 0, full_tags = 0;
  if (config.atis_checks) {
    const Vocabulary full = build_vocab(train);
    full_intents = full.intents.size();
    full_tags = full.num_slot_labels();
  }
  if (!config.dev_path.empty()) {
    d.train = std::move(train);
    d.dev = load_corpus(config.dev_path, config.format_for(config.dev_path), options);
  } else if (config.dev_split > 0) {
    TrainDevSplit split = split_off_dev(std::move(train), config.dev_split);
    d.train = std::move(split.train);
    d.dev = std::move(split.dev);
  } else {
    d.train = std::move(train);
    d.dev = d.train;
  }
  if (!config.test_path.empty()) {
    d.test = load_corpus(config.test_path, config.format_for(config.test_path), options);
  }
  if (config.atis_checks) {
    d.warnings = atis_count_warnings(
        full_train, config.test_path.empty() ? kAtisTestUtterances : d.test.size(),
        full_intents, full_tags);
  }
  return d;
}

TrainOutcome run_training(const RunConfig &config, const Datasets &data, const LogSink &log) {
  auto emit = [&](const nlohmann::json &j) {
    if (log) log(j);
  };
  TrainOutcome out;
  out.vocab = build_vocab(data.train, config.min_freq);
  const ModelConfig model_config = config.model_config(out.vocab);
  out.model = std::make_unique<BiModel<float>>(model_config);

  emit({{"event", "config"}, {"config", config_json(config)}});
  EncodeStats stats;
  make_batches(data.dev, out.vocab, config.batch_size, std::nullopt, &stats);
  emit({{"event", "data"},
        {"train_utterances", data.train.size()},
        {"dev_utterances", data.dev.size()},
        {"test_utterances", data.test.size()},
        {"words", out.vocab.words.size()},
        {"slot_labels", out.vocab.num_slot_labels()},
        {"intents", out.vocab.intents.size()},
        {"dev_oov_tokens", stats.oov_tokens},
        {"dev_unseen_tags", stats.unseen_tags},
        {"dev_unseen_intents", stats.unseen_intents},
        {"parameters", out.model->parameter_count()},
        {"warnings", data.warnings}});

  out.result = train(*out.model, out.vocab, data.train, data.dev, config.train_options(),
                     [&](const EpochRecord &r) {
                       emit({{"event", "epoch"},
                             {"epoch", r.epoch},
                             {"intent_loss", r.intent_loss},
                             {"slot_loss", r.slot_loss},
                             {"dev_slot_f1", r.dev.slot_f1},
                             {"dev_intent_accuracy", r.dev.intent_accuracy},
                             {"improved", r.improved}});
                     });
  if (!data.test.empty()) {
    out.test = evaluate(*out.model, out.vocab, data.test, config.chunk_scheme());
  }
  return out;
}

nlohmann::json train_and_save(const RunConfig &config, const LogSink &echo) {
  if (config.checkpoint_path.empty()) throw UsageError("checkpoint_path is not set");
  const Datasets data = load_datasets(config);

  std::ofstream log_file(config.effective_log_path(), std::ios::trunc);
  if (!log_file) throw IoError("cannot write log '" + config.effective_log_path() + "'");
  auto log = [&](const nlohmann::json &j) {
    log_file << j.dump() << '\n';
    log_file.flush();
    if (echo) echo(j);
  };

  TrainOutcome outcome = run_training(config, data, log);
  const std::string config_text = config.to_text();
  save_checkpoint(config.checkpoint_path, *outcome.model, outcome.vocab, config_text);
  write_text(config.checkpoint_path + ".config", config_text);

  nlohmann::json summary = {{"event", "done"},
                            {"epochs", outcome.result.log.size()},
                            {"best_epoch", outcome.result.best_epoch},
                            {"dev", outcome.result.best_dev.to_json()},
                            {"checkpoint", config.checkpoint_path}};
  if (outcome.test) summary["test"] = outcome.test->to_json();
  log(summary);
  return summary;
}

double AblationRow::mean_dev_f1() const { return mean_of(dev, &EvalReport::slot_f1); }
double AblationRow::mean_dev_accuracy() const { return mean_of(dev, &EvalReport::intent_accuracy); }
double AblationRow::mean_test_f1() const { return mean_of(test, &EvalReport::slot_f1); }
double AblationRow::mean_test_accuracy() const {
  return mean_of(test, &EvalReport::intent_accuracy);
}

std::vector<AblationRow> run_ablation(const RunConfig &config, std::size_t num_seeds,
                                      const LogSink &log) {
  if (num_seeds == 0) throw UsageError("ablate needs at least one seed");
  const Datasets data = load_datasets(config);
  std::vector<AblationRow> rows(2);
  rows[0].name = "shared";
  rows[1].name = "ablated";
  for (std::size_t i = 0; i < num_seeds; ++i) {
    for (std::size_t r = 0; r < 2; ++r) {
      RunConfig run = config;
      run.seed = config.seed + i;
      run.share_states = r == 0;
      LogSink tagged;
      if (log) {
        tagged = [&, seed = run.seed](const nlohmann::json &j) {
          nlohmann::json copy = j;
          copy["run"] = rows[r].name;
          copy["seed"] = seed;
          log(copy);
        };
      }
      TrainOutcome outcome = run_training(run, data, tagged);
      rows[r].seeds.push_back(run.seed);
      rows[r].dev.push_back(outcome.result.best_dev);
      if (outcome.test) rows[r].test.push_back(*outcome.test);
      rows[r].data_order.push_back(outcome.result.data_order_fingerprint);
    }
  }
  return rows;
}

nlohmann::json ablation_to_json(const std::vector<AblationRow> &rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const AblationRow &row : rows) {
    nlohmann::json j = {{"name", row.name},
                        {"seeds", row.seeds},
                        {"data_order", row.data_order},
                        {"mean_dev_slot_f1", row.mean_dev_f1()},
                        {"mean_dev_intent_accuracy", row.mean_dev_accuracy()},
                        {"dev_slot_f1", nlohmann::json::array()}};
    for (const EvalReport &r : row.dev) j["dev_slot_f1"].push_back(r.slot_f1);
    if (!row.test.empty()) {
      j["mean_test_slot_f1"] = row.mean_test_f1();
      j["mean_test_intent_accuracy"] = row.mean_test_accuracy();
    }
    out.push_back(j);
  }
  return out;
}

std::string ablation_table(const std::vector<AblationRow> &rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %6s %12s %12s %12s %12s\n", "run", "seeds", "dev_f1",
                "dev_acc", "test_f1", "test_acc");
  out << line;
  for (const AblationRow &row : rows) {
    if (row.test.empty()) {
      std::snprintf(line, sizeof line, "%-8s %6zu %12.2f %12.2f %12s %12s\n", row.name.c_str(),
                    row.seeds.size(), row.mean_dev_f1(), row.mean_dev_accuracy(), "-", "-");
    } else {
      std::snprintf(line, sizeof line, "%-8s %6zu %12.2f %12.2f %12.2f %12.2f\n",
                    row.name.c_str(), row.seeds.size(), row.mean_dev_f1(),
                    row.mean_dev_accuracy(), row.mean_test_f1(), row.mean_test_accuracy());
    }
    out << line;
  }
  return out.str();
}

}  // namespace bimodel
