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

#include "bimodel/bimodel.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "checkpoint.h"
#include "config.h"
#include "errors.h"
#include "experiment.h"
#include "gradcheck.h"
#include "json.hpp"
#include "trainer.h"

struct bm_config {
  bimodel::RunConfig config;
};

struct bm_model {
  bimodel::Checkpoint checkpoint;
  bimodel::RunConfig config;
};

namespace {

thread_local std::string last_error;

bm_status fail(bm_status status, const std::string &message) {
  last_error = message;
  return status;
}

bm_status status_of(const bimodel::Error &e) {
  using bimodel::ErrorKind;
  switch (e.kind()) {
    case ErrorKind::kUsage:
      return BM_ERR_USAGE;
    case ErrorKind::kParse:
    case ErrorKind::kContract:
      return BM_ERR_DATA;
    case ErrorKind::kIo:
      return BM_ERR_IO;
    case ErrorKind::kCheckpoint:
      return BM_ERR_CHECKPOINT;
    case ErrorKind::kDimension:
    case ErrorKind::kIndex:
      break;
  }
  return BM_ERR_INTERNAL;
}

// Runs body, translating exceptions into status codes.
template <typename F>
bm_status guarded(F &&body) {
  try {
    last_error.clear();
    return body();
  } catch (const bimodel::Error &e) {
    return fail(status_of(e), e.what());
  } catch (const nlohmann::json::exception &e) {
    return fail(BM_ERR_USAGE, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc &) {
    return fail(BM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(BM_ERR_INTERNAL, e.what());
  }
}

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char **out, const std::string &s) {
  if (out) *out = dup_string(s);
}

bool missing(const void *p, const char *what, bm_status *status) {
  if (p) return false;
  *status = fail(BM_ERR_USAGE, std::string(what) + " is null");
  return true;
}

bimodel::LogSink sink(bm_log_fn log, void *user_data) {
  if (!log) return {};
  return [log, user_data](const nlohmann::json &j) { log(j.dump().c_str(), user_data); };
}

}  // namespace

extern "C" {

const char *bm_version(void) { return "1.0.0"; }

const char *bm_last_error(void) { return last_error.c_str(); }

void bm_free_string(char *s) { std::free(s); }

bm_config *bm_config_create(void) { return new (std::nothrow) bm_config(); }

void bm_config_destroy(bm_config *config) { delete config; }

bm_status bm_config_load_file(bm_config *config, const char *path) {
  bm_status s;
  if (missing(config, "config", &s) || missing(path, "path", &s)) return s;
  return guarded([&] {
    config->config.apply_file(path);
    return BM_OK;
  });
}

bm_status bm_config_set(bm_config *config, const char *key, const char *value) {
  bm_status s;
  if (missing(config, "config", &s) || missing(key, "key", &s) || missing(value, "value", &s)) {
    return s;
  }
  return guarded([&] {
    config->config.set(key, value);
    return BM_OK;
  });
}

bm_status bm_config_get(const bm_config *config, const char *key, char **value) {
  bm_status s;
  if (missing(config, "config", &s) || missing(key, "key", &s)) return s;
  return guarded([&] {
    put(value, config->config.get(key));
    return BM_OK;
  });
}

bm_status bm_config_apply_seed_env(bm_config *config) {
  bm_status s;
  if (missing(config, "config", &s)) return s;
  return guarded([&] {
    config->config.apply_seed_fallback();
    return BM_OK;
  });
}

bm_status bm_config_to_text(const bm_config *config, char **text) {
  bm_status s;
  if (missing(config, "config", &s)) return s;
  return guarded([&] {
    put(text, config->config.to_text());
    return BM_OK;
  });
}

size_t bm_config_key_count(void) { return bimodel::RunConfig::keys().size(); }

const char *bm_config_key_name(size_t index) {
  const auto &keys = bimodel::RunConfig::keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

bm_status bm_train(const bm_config *config, bm_log_fn log, void *user_data, char **summary_json) {
  bm_status s;
  if (missing(config, "config", &s)) return s;
  return guarded([&] {
    const nlohmann::json summary = bimodel::train_and_save(config->config, sink(log, user_data));
    put(summary_json, summary.dump());
    return BM_OK;
  });
}

bm_status bm_ablate(const bm_config *config, size_t num_seeds, bm_log_fn log, void *user_data,
                    char **result_json, char **table) {
  bm_status s;
  if (missing(config, "config", &s)) return s;
  return guarded([&] {
    const auto rows = bimodel::run_ablation(config->config, num_seeds, sink(log, user_data));
    put(result_json, bimodel::ablation_to_json(rows).dump());
    put(table, bimodel::ablation_table(rows));
    return BM_OK;
  });
}

bm_status bm_model_load(const char *path, bm_model **model) {
  bm_status s;
  if (missing(path, "path", &s) || missing(model, "model", &s)) return s;
  *model = nullptr;
  return guarded([&] {
    auto m = std::make_unique<bm_model>();
    m->checkpoint = bimodel::load_checkpoint(path);
    try {
      m->config.apply_text(m->checkpoint.run_config, "checkpoint run config");
    } catch (const bimodel::UsageError &e) {
      throw bimodel::CheckpointError(e.what());
    }
    *model = m.release();
    return BM_OK;
  });
}

void bm_model_destroy(bm_model *model) { delete model; }

bm_status bm_model_save(const bm_model *model, const char *path) {
  bm_status s;
  if (missing(model, "model", &s) || missing(path, "path", &s)) return s;
  return guarded([&] {
    bimodel::save_checkpoint(path, *model->checkpoint.model, model->checkpoint.vocab,
                             model->checkpoint.run_config);
    return BM_OK;
  });
}

bm_status bm_model_config_text(const bm_model *model, char **text) {
  bm_status s;
  if (missing(model, "model", &s)) return s;
  return guarded([&] {
    put(text, model->checkpoint.run_config);
    return BM_OK;
  });
}

bm_status bm_model_evaluate(const bm_model *model, const char *corpus_path, const char *format,
                            int strict_chunks, char **report_json) {
  bm_status s;
  if (missing(model, "model", &s) || missing(corpus_path, "corpus path", &s)) return s;
  return guarded([&] {
    const bimodel::CorpusFormat fmt = format && *format
                                          ? bimodel::parse_corpus_format(format)
                                          : bimodel::guess_corpus_format(corpus_path);
    const auto corpus = bimodel::load_corpus(corpus_path, fmt, model->config.load_options());
    const auto report = bimodel::evaluate(
        *model->checkpoint.model, model->checkpoint.vocab, corpus,
        strict_chunks ? bimodel::ChunkScheme::kStrict : bimodel::ChunkScheme::kConlleval);
    put(report_json, report.to_json().dump());
    return BM_OK;
  });
}

bm_status bm_model_predict(const bm_model *model, const char *text, char **result_json) {
  bm_status s;
  if (missing(model, "model", &s) || missing(text, "text", &s)) return s;
  return guarded([&] {
    std::istringstream in(text);
    std::vector<std::string> tokens;
    for (std::string tok; in >> tok;) tokens.push_back(tok);
    if (tokens.empty()) return fail(BM_ERR_USAGE, "predict: empty text");
    const auto parse = bimodel::predict(*model->checkpoint.model, model->checkpoint.vocab, tokens,
                                        model->config.load_options());
    const nlohmann::json j = {
        {"intent", parse.intent}, {"tokens", tokens}, {"tags", parse.slot_tags}};
    put(result_json, j.dump());
    return BM_OK;
  });
}

bm_status bm_report_table(const char *report_json, char **table) {
  bm_status s;
  if (missing(report_json, "report", &s)) return s;
  return guarded([&] {
    put(table, bimodel::EvalReport::from_json(nlohmann::json::parse(report_json)).to_table());
    return BM_OK;
  });
}

bm_status bm_gradcheck(const char *size, const char *corrupt_parameter, char **report_json,
                       char **report_text) {
  return guarded([&] {
    auto options = bimodel::GradcheckOptions::preset(size ? size : "small");
    if (corrupt_parameter) options.corrupt_parameter = corrupt_parameter;
    const auto report = bimodel::run_gradcheck(options);
    put(report_json, report.to_json().dump());
    put(report_text, report.to_text());
    if (!report.passed()) return fail(BM_ERR_VERIFY, "gradient check failed at " + report.worst);
    return BM_OK;
  });
}

}  // extern "C"
