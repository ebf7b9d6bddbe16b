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

// Command-line front end over the C API.

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bimodel/bimodel.h"
#include "json.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kVerify = 3 };

int exit_code(bm_status status) {
  switch (status) {
    case BM_OK:
      return kOk;
    case BM_ERR_USAGE:
      return kUsage;
    case BM_ERR_VERIFY:
      return kVerify;
    default:
      return kData;
  }
}

int report(bm_status status) {
  if (status != BM_OK) std::cerr << "error: " << bm_last_error() << "\n";
  return exit_code(status);
}

struct Owned {
  char *s = nullptr;
  ~Owned() { bm_free_string(s); }
  std::string str() const { return s ? s : ""; }
};

using ConfigPtr = std::unique_ptr<bm_config, decltype(&bm_config_destroy)>;
using ModelPtr = std::unique_ptr<bm_model, decltype(&bm_model_destroy)>;

std::string kebab(std::string key) {
  for (char &c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

// Short aliases for the path keys.
const std::map<std::string, std::string> kAliases = {{"train_path", "--train"},
                                                     {"dev_path", "--dev"},
                                                     {"test_path", "--test"},
                                                     {"checkpoint_path", "--checkpoint"},
                                                     {"log_path", "--log"}};

// One string option per config key plus --config; applied in that order.
struct ConfigOptions {
  std::string file;
  std::map<std::string, std::optional<std::string>> values;

  void attach(CLI::App &cmd) {
    cmd.add_option("-c,--config", file, "key = value config file");
    const size_t n = bm_config_key_count();
    for (size_t i = 0; i < n; ++i) {
      const std::string key = bm_config_key_name(i);
      std::string names = "--" + kebab(key);
      if (auto it = kAliases.find(key); it != kAliases.end()) names += "," + it->second;
      cmd.add_option(names, values[key], "overrides config key " + key);
    }
  }

  bm_status build(ConfigPtr &config) const {
    if (!config) return BM_ERR_INTERNAL;
    if (!file.empty()) {
      if (bm_status s = bm_config_load_file(config.get(), file.c_str()); s != BM_OK) return s;
    }
    for (const auto &[key, value] : values) {
      if (!value) continue;
      if (bm_status s = bm_config_set(config.get(), key.c_str(), value->c_str()); s != BM_OK) {
        return s;
      }
    }
    return bm_config_apply_seed_env(config.get());
  }
};

void print_epoch(const char *line, void *user_data) {
  if (*static_cast<bool *>(user_data)) return;
  const auto j = nlohmann::json::parse(line);
  const std::string event = j.value("event", "");
  char buf[256];
  if (event == "epoch") {
    std::snprintf(buf, sizeof buf,
                  "%s epoch %3zu  L1 %.4f  L2 %.4f  dev F1 %6.2f  dev acc %6.2f%s\n",
                  j.contains("run") ? j["run"].get<std::string>().c_str() : "",
                  j["epoch"].get<size_t>(), j["intent_loss"].get<double>(),
                  j["slot_loss"].get<double>(), j["dev_slot_f1"].get<double>(),
                  j["dev_intent_accuracy"].get<double>(), j["improved"].get<bool>() ? "  *" : "");
    std::cerr << buf;
  } else if (event == "data") {
    for (const auto &w : j["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  }
}

int cmd_train(const ConfigOptions &options, bool quiet) {
  ConfigPtr config(bm_config_create(), &bm_config_destroy);
  if (bm_status s = options.build(config); s != BM_OK) return report(s);
  Owned summary;
  if (bm_status s = bm_train(config.get(), &print_epoch, &quiet, &summary.s); s != BM_OK) {
    return report(s);
  }
  std::cout << summary.str() << "\n";
  return kOk;
}

int cmd_eval(const ConfigOptions &options) {
  ConfigPtr config(bm_config_create(), &bm_config_destroy);
  if (bm_status s = options.build(config); s != BM_OK) return report(s);
  auto get = [&](const char *key) {
    Owned v;
    bm_config_get(config.get(), key, &v.s);
    return v.str();
  };
  const std::string checkpoint = get("checkpoint_path"), test = get("test_path");
  if (checkpoint.empty() || test.empty()) {
    std::cerr << "error: eval needs --checkpoint and --test\n";
    return kUsage;
  }
  bm_model *raw = nullptr;
  if (bm_status s = bm_model_load(checkpoint.c_str(), &raw); s != BM_OK) return report(s);
  ModelPtr model(raw, &bm_model_destroy);
  Owned json, table;
  const std::string format = get("format");
  if (bm_status s = bm_model_evaluate(model.get(), test.c_str(), format.c_str(),
                                      get("strict_chunks") == "true", &json.s);
      s != BM_OK) {
    return report(s);
  }
  if (bm_status s = bm_report_table(json.s, &table.s); s != BM_OK) return report(s);
  std::cout << json.str() << "\n" << table.str();
  return kOk;
}

int cmd_predict(const std::string &checkpoint, const std::string &text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    std::cerr << "error: predict needs non-empty --text\n";
    return kUsage;
  }
  bm_model *raw = nullptr;
  if (bm_status s = bm_model_load(checkpoint.c_str(), &raw); s != BM_OK) return report(s);
  ModelPtr model(raw, &bm_model_destroy);
  Owned out;
  if (bm_status s = bm_model_predict(model.get(), text.c_str(), &out.s); s != BM_OK) {
    return report(s);
  }
  const auto j = nlohmann::json::parse(out.str());
  std::cout << "# intent: " << j["intent"].get<std::string>() << "\n";
  for (size_t i = 0; i < j["tokens"].size(); ++i) {
    std::cout << j["tokens"][i].get<std::string>() << "\t" << j["tags"][i].get<std::string>()
              << "\n";
  }
  return kOk;
}

int cmd_gradcheck(const std::string &size, const std::string &corrupt, bool json) {
  Owned report_json, report_text;
  const bm_status s = bm_gradcheck(size.c_str(), corrupt.empty() ? nullptr : corrupt.c_str(),
                                   &report_json.s, &report_text.s);
  if (s != BM_OK && s != BM_ERR_VERIFY) return report(s);
  std::cout << (json ? report_json.str() + "\n" : report_text.str());
  return report(s);
}

int cmd_ablate(const ConfigOptions &options, size_t seeds, bool json, bool quiet) {
  ConfigPtr config(bm_config_create(), &bm_config_destroy);
  if (bm_status s = options.build(config); s != BM_OK) return report(s);
  Owned result, table;
  if (bm_status s = bm_ablate(config.get(), seeds, &print_epoch, &quiet, &result.s, &table.s);
      s != BM_OK) {
    return report(s);
  }
  std::cout << (json ? result.str() + "\n" : table.str());
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Bi-model RNN intent detection and slot filling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bm_version());

  bool quiet = false, json = false;

  ConfigOptions train_opts;
  CLI::App *train = app.add_subcommand("train", "train a model and write a checkpoint");
  train_opts.attach(*train);
  train->add_flag("-q,--quiet", quiet, "no per-epoch progress on stderr");

  ConfigOptions eval_opts;
  CLI::App *eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  eval_opts.attach(*eval);

  std::string checkpoint, text;
  CLI::App *predict = app.add_subcommand("predict", "tag one whitespace-tokenized utterance");
  predict->add_option("--checkpoint,--checkpoint-path", checkpoint, "checkpoint file")->required();
  predict->add_option("--text", text, "utterance")->required();

  std::string size = "small", corrupt;
  CLI::App *gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--size", size, "small or tiny")->capture_default_str();
  gradcheck->add_option("--corrupt-adjoint", corrupt,
                        "scale this parameter's analytic gradient by 1.5 (negative control)");
  gradcheck->add_flag("--json", json, "print the JSON report");

  ConfigOptions ablate_opts;
  size_t seeds = 3;
  CLI::App *ablate = app.add_subcommand("ablate", "shared vs. zero-sharing paired runs");
  ablate_opts.attach(*ablate);
  ablate->add_option("--seeds", seeds, "number of consecutive seeds")->capture_default_str();
  ablate->add_flag("--json", json, "print JSON rows instead of the table");
  ablate->add_flag("-q,--quiet", quiet, "no per-epoch progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_opts, quiet);
    if (*eval) return cmd_eval(eval_opts);
    if (*predict) return cmd_predict(checkpoint, text);
    if (*gradcheck) return cmd_gradcheck(size, corrupt, json);
    if (*ablate) return cmd_ablate(ablate_opts, seeds, json, quiet);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
