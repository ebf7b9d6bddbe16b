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

#include <cstdlib>
#include <filesystem>

#include "config.h"
#include "doctest.h"
#include "errors.h"
#include "test_util.h"

using namespace bimodel;
using bimodel::testing::TempDir;
using bimodel::testing::write_file;

namespace {

std::string usage_error(const std::function<void()> &f) {
  try {
    f();
  } catch (const UsageError &e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("key = value parsing") {
  const auto kv = parse_key_values("# header\n a = 1 \n\nb=two # trailing\r\nc =\n", "f.cfg");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0] == std::pair<std::string, std::string>{"a", "1"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"b", "two"});
  CHECK(kv[2].second.empty());
  CHECK(usage_error([] { parse_key_values("a = 1\njunk\n", "f.cfg"); }).find("f.cfg:2") !=
        std::string::npos);
  CHECK_THROWS_AS(parse_key_values("= 3", "f.cfg"), UsageError);
}

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.variant == Variant::kWithDecoder);
  CHECK(c.hidden_dim == 200);
  CHECK(c.num_layers == 2);
  CHECK(c.embed_dim == 300);
  CHECK(c.label_embed_dim == 50);
  CHECK(c.batch_size == 16);
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.clip_norm == 5.0);
  CHECK(c.max_epochs == 50);
  CHECK(c.patience == 10);
  CHECK(c.tie_embeddings);
  CHECK(c.refresh_h1);
  CHECK(c.share_states);
  CHECK(c.init_range == 0.1);
  CHECK(c.dev_split == 500);
}

TEST_CASE("set and get") {
  RunConfig c;
  c.set("hidden-dim", "64");
  c.set("learning_rate", "0.02");
  c.set("variant", "without_decoder");
  c.set("tie-embeddings", "false");
  CHECK(c.hidden_dim == 64);
  CHECK(c.get("hidden_dim") == "64");
  CHECK(c.get("learning-rate") == "0.02");
  CHECK(c.variant == Variant::kWithoutDecoder);
  CHECK_FALSE(c.tie_embeddings);
  CHECK(c.assigned.count("hidden_dim"));
  CHECK(c.assigned.count("tie_embeddings"));

  CHECK(usage_error([&] { c.set("hiden_dim", "3"); }).find("unknown key") != std::string::npos);
  CHECK_THROWS_AS(c.set("hidden_dim", "-1"), UsageError);
  CHECK_THROWS_AS(c.set("hidden_dim", "3x"), UsageError);
  CHECK_THROWS_AS(c.set("learning_rate", "fast"), UsageError);
  CHECK_THROWS_AS(c.set("share_states", "maybe"), UsageError);
  CHECK_THROWS_AS(c.set("format", "xml"), UsageError);
  CHECK_THROWS_AS(c.set("variant", "other"), UsageError);
}

TEST_CASE("text round trip") {
  RunConfig c;
  c.set("seed", "42");
  c.set("learning_rate", "0.0003");
  c.set("init_range", "0.35");
  c.set("train_path", "/data/train.conll");
  c.set("strict_chunks", "true");
  RunConfig d;
  d.apply_text(c.to_text(), "text");
  CHECK(d.to_text() == c.to_text());
  CHECK(d.learning_rate == 0.0003);
  CHECK(d.assigned.size() == RunConfig::keys().size());
  CHECK(d.chunk_scheme() == ChunkScheme::kStrict);

  ModelConfig m;
  m.variant = Variant::kWithoutDecoder;
  m.vocab_size = 11;
  m.num_intents = 3;
  m.num_tags = 7;
  m.init_range = 0.25;
  m.share_states = false;
  CHECK(model_config_from_text(model_config_to_text(m)) == m);
  CHECK_THROWS_AS(model_config_from_text("variant = with_decoder\n"), CheckpointError);
  CHECK_THROWS_AS(model_config_from_text(std::string(model_config_to_text(m)) + "seed = x\n"),
                  CheckpointError);
}

TEST_CASE("files and precedence") {
  TempDir dir("cfg");
  std::filesystem::create_directories(dir.file("sub"));
  const std::string path = dir.file("sub/run.cfg");
  write_file(path, "train_path = data/train.conll\ntest_path = /abs/test.conll\nhidden_dim = 10\n");
  RunConfig c;
  c.apply_file(path);
  CHECK(c.train_path == dir.file("sub/data/train.conll"));
  CHECK(c.test_path == "/abs/test.conll");
  c.set("hidden_dim", "12");  // command-line flags are applied after the file
  CHECK(c.hidden_dim == 12);
  CHECK_THROWS_AS(c.apply_file(dir.file("nope.cfg")), IoError);

  write_file(path, "bogus = 1\n");
  CHECK_THROWS_AS(RunConfig{}.apply_file(path), UsageError);
}

TEST_CASE("seed from the environment") {
  ::setenv("BIMODEL_SEED", "77", 1);
  RunConfig a;
  a.apply_seed_fallback();
  CHECK(a.seed == 77);
  RunConfig b;
  b.set("seed", "5");
  b.apply_seed_fallback();
  CHECK(b.seed == 5);
  ::setenv("BIMODEL_SEED", "abc", 1);
  RunConfig bad;
  CHECK_THROWS_AS(bad.apply_seed_fallback(), UsageError);
  ::unsetenv("BIMODEL_SEED");
  RunConfig none;
  none.apply_seed_fallback();
  CHECK(none.seed == 1);
}

TEST_CASE("derived settings") {
  RunConfig c;
  c.checkpoint_path = "m.ckpt";
  CHECK(c.effective_log_path() == "m.ckpt.log.jsonl");
  c.log_path = "x.jsonl";
  CHECK(c.effective_log_path() == "x.jsonl");
  CHECK(c.format_for("a.jsonl") == CorpusFormat::kJsonl);
  c.set("format", "conll");
  CHECK(c.format_for("a.jsonl") == CorpusFormat::kConll);

  Vocabulary v;
  v.words = SymbolTable({"<pad>", "<unk>", "a"});
  v.tags = SymbolTable({"<pad>", "<bos>", "O"});
  v.intents = SymbolTable::from_symbols({"x", "y"}, 0);
  c.set("hidden_dim", "9");
  c.set("share_states", "false");
  const ModelConfig m = c.model_config(v);
  CHECK(m.vocab_size == 3);
  CHECK(m.num_tags == 3);
  CHECK(m.num_intents == 2);
  CHECK(m.hidden_dim == 9);
  CHECK_FALSE(m.share_states);
  CHECK(c.train_options().learning_rate == c.learning_rate);
  c.set("normalize_digits", "true");
  CHECK(c.load_options().normalize_digits);
}
