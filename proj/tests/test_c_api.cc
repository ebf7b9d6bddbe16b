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

#include <bimodel/bimodel.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;

namespace {

const std::string kToyDir = BIMODEL_TOY_DIR;

struct Str {
  char *s = nullptr;
  ~Str() { bm_free_string(s); }
  std::string get() const { return s ? s : ""; }
};

struct Scratch {
  std::filesystem::path dir;
  Scratch() {
    dir = std::filesystem::temp_directory_path() /
          ("bimodel_capi_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
  std::string file(const std::string &name) const { return (dir / name).string(); }
};

bm_model *load_toy() {
  bm_model *m = nullptr;
  REQUIRE(bm_model_load((kToyDir + "/toy.ckpt").c_str(), &m) == BM_OK);
  return m;
}

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::string(bm_version()).size() > 0);
  bm_model *m = nullptr;
  CHECK(bm_model_load(nullptr, &m) == BM_ERR_USAGE);
  CHECK(std::string(bm_last_error()).find("null") != std::string::npos);
  CHECK(bm_model_load("/nonexistent/x.ckpt", &m) == BM_ERR_IO);
  CHECK(m == nullptr);
  CHECK(std::string(bm_last_error()).find("/nonexistent/x.ckpt") != std::string::npos);
  bm_free_string(nullptr);
  bm_model_destroy(nullptr);
  bm_config_destroy(nullptr);
}

TEST_CASE("config handle") {
  bm_config *c = bm_config_create();
  REQUIRE(c != nullptr);
  CHECK(bm_config_set(c, "hidden-dim", "17") == BM_OK);
  Str v;
  CHECK(bm_config_get(c, "hidden_dim", &v.s) == BM_OK);
  CHECK(v.get() == "17");
  CHECK(bm_config_set(c, "no_such_key", "1") == BM_ERR_USAGE);
  CHECK(std::string(bm_last_error()).find("no_such_key") != std::string::npos);
  CHECK(bm_config_set(c, "hidden_dim", "x") == BM_ERR_USAGE);
  CHECK(bm_config_load_file(c, "/nonexistent.cfg") == BM_ERR_IO);

  const size_t n = bm_config_key_count();
  CHECK(n > 20);
  CHECK(bm_config_key_name(n) == nullptr);
  Str text;
  CHECK(bm_config_to_text(c, &text.s) == BM_OK);
  for (size_t i = 0; i < n; ++i) {
    CHECK(text.get().find(std::string(bm_config_key_name(i)) + " = ") != std::string::npos);
  }
  CHECK(text.get().find("hidden_dim = 17\n") != std::string::npos);
  bm_config_destroy(c);
}

TEST_CASE("toy checkpoint") {
  bm_model *m = load_toy();
  Str report, table;
  REQUIRE(bm_model_evaluate(m, (kToyDir + "/toy.conll").c_str(), nullptr, 0, &report.s) == BM_OK);
  const json r = json::parse(report.get());
  CHECK(r["slot_f1"].get<double>() == 100.0);
  CHECK(r["intent_accuracy"].get<double>() == 100.0);
  CHECK(bm_report_table(report.s, &table.s) == BM_OK);
  CHECK(table.get().find("slot F1") != std::string::npos);
  CHECK(bm_report_table("{", &table.s) == BM_ERR_USAGE);

  Str pred;
  REQUIRE(bm_model_predict(m, "show me flights from boston to denver", &pred.s) == BM_OK);
  const json p = json::parse(pred.get());
  CHECK(p["intent"] == "atis_flight");
  CHECK(p["tokens"].size() == 7);
  CHECK(p["tags"].size() == 7);
  CHECK(p["tags"][4] == "B-fromloc.city_name");
  CHECK(p["tags"][6] == "B-toloc.city_name");
  CHECK(bm_model_predict(m, "   ", &pred.s) != BM_OK);

  Str cfg;
  CHECK(bm_model_config_text(m, &cfg.s) == BM_OK);
  CHECK(cfg.get().find("init_range = 0.4") != std::string::npos);

  Scratch dir;
  CHECK(bm_model_save(m, dir.file("copy.ckpt").c_str()) == BM_OK);
  std::ifstream a(kToyDir + "/toy.ckpt", std::ios::binary), b(dir.file("copy.ckpt"), std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  CHECK(bm_model_evaluate(m, dir.file("missing.conll").c_str(), nullptr, 0, &report.s) ==
        BM_ERR_IO);
  std::ofstream(dir.file("bad.conll")) << "# intent: x\nword\n";
  CHECK(bm_model_evaluate(m, dir.file("bad.conll").c_str(), nullptr, 0, &report.s) ==
        BM_ERR_DATA);
  bm_model_destroy(m);

  std::string damaged = sa.str();
  damaged[damaged.size() / 3] ^= 1;
  std::ofstream(dir.file("damaged.ckpt"), std::ios::binary) << damaged;
  bm_model *bad = nullptr;
  CHECK(bm_model_load(dir.file("damaged.ckpt").c_str(), &bad) == BM_ERR_CHECKPOINT);
  CHECK(std::string(bm_last_error()).find("checkpoint") != std::string::npos);
}

TEST_CASE("train through the C API") {
  Scratch dir;
  bm_config *c = bm_config_create();
  REQUIRE(bm_config_load_file(c, (kToyDir + "/toy.cfg").c_str()) == BM_OK);
  bm_config_set(c, "hidden_dim", "8");
  bm_config_set(c, "max_epochs", "3");
  bm_config_set(c, "checkpoint_path", dir.file("m.ckpt").c_str());
  std::vector<std::string> lines;
  auto collect = [](const char *line, void *user) {
    static_cast<std::vector<std::string> *>(user)->push_back(line);
  };
  Str summary;
  REQUIRE(bm_train(c, collect, &lines, &summary.s) == BM_OK);
  CHECK(json::parse(summary.get())["event"] == "done");
  std::size_t epochs = 0;
  for (const auto &l : lines) epochs += json::parse(l)["event"] == "epoch";
  CHECK(epochs == 3);
  CHECK(std::filesystem::exists(dir.file("m.ckpt")));
  CHECK(std::filesystem::exists(dir.file("m.ckpt.config")));
  CHECK(std::filesystem::exists(dir.file("m.ckpt.log.jsonl")));

  bm_config_set(c, "train_path", dir.file("missing.conll").c_str());
  bm_config_set(c, "checkpoint_path", dir.file("other.ckpt").c_str());
  CHECK(bm_train(c, nullptr, nullptr, nullptr) == BM_ERR_IO);
  CHECK_FALSE(std::filesystem::exists(dir.file("other.ckpt")));
  bm_config_destroy(c);
}

TEST_CASE("gradcheck through the C API") {
  Str j, t;
  CHECK(bm_gradcheck("tiny", nullptr, &j.s, &t.s) == BM_OK);
  CHECK(json::parse(j.get())["passed"] == true);
  Str j2, t2;
  CHECK(bm_gradcheck("tiny", "intent/output/b", &j2.s, &t2.s) == BM_ERR_VERIFY);
  CHECK(json::parse(j2.get())["passed"] == false);
  Str j3, t3;
  CHECK(bm_gradcheck("enormous", nullptr, &j3.s, &t3.s) == BM_ERR_USAGE);
}
