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

#include "config.h"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "errors.h"

namespace bimodel {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string canonical_key(std::string_view key) {
  std::string k(key);
  for (char &c : k) {
    if (c == '-') c = '_';
  }
  return k;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config: '" + std::string(key) + "' expects a non-negative integer, got '" +
                     std::string(v) + "'");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config: '" + std::string(key) + "' expects an unsigned integer, got '" +
                     std::string(v) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config: '" + std::string(key) + "' expects a number, got '" +
                     std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config: '" + std::string(key) + "' expects true or false, got '" +
                   std::string(v) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

struct Field {
  std::function<void(RunConfig &, std::string_view)> set;
  std::function<std::string(const RunConfig &)> get;
};

template <typename M>
Field size_field(M RunConfig::*member, const char *key) {
  return {[member, key](RunConfig &c, std::string_view v) { c.*member = parse_size(key, v); },
          [member](const RunConfig &c) { return std::to_string(c.*member); }};
}

Field double_field(double RunConfig::*member, const char *key) {
  return {[member, key](RunConfig &c, std::string_view v) { c.*member = parse_double(key, v); },
          [member](const RunConfig &c) { return format_double(c.*member); }};
}

Field bool_field(bool RunConfig::*member, const char *key) {
  return {[member, key](RunConfig &c, std::string_view v) { c.*member = parse_bool(key, v); },
          [member](const RunConfig &c) { return std::string(c.*member ? "true" : "false"); }};
}

Field string_field(std::string RunConfig::*member) {
  return {[member](RunConfig &c, std::string_view v) { c.*member = std::string(v); },
          [member](const RunConfig &c) { return c.*member; }};
}

const std::vector<std::pair<std::string, Field>> &fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"variant",
       {[](RunConfig &c, std::string_view v) { c.variant = parse_variant(v); },
        [](const RunConfig &c) { return std::string(variant_name(c.variant)); }}},
      {"hidden_dim", size_field(&RunConfig::hidden_dim, "hidden_dim")},
      {"num_layers", size_field(&RunConfig::num_layers, "num_layers")},
      {"embed_dim", size_field(&RunConfig::embed_dim, "embed_dim")},
      {"label_embed_dim", size_field(&RunConfig::label_embed_dim, "label_embed_dim")},
      {"batch_size", size_field(&RunConfig::batch_size, "batch_size")},
      {"learning_rate", double_field(&RunConfig::learning_rate, "learning_rate")},
      {"max_epochs", size_field(&RunConfig::max_epochs, "max_epochs")},
      {"patience", size_field(&RunConfig::patience, "patience")},
      {"seed",
       {[](RunConfig &c, std::string_view v) { c.seed = parse_u64("seed", v); },
        [](const RunConfig &c) { return std::to_string(c.seed); }}},
      {"init_range", double_field(&RunConfig::init_range, "init_range")},
      {"clip_norm", double_field(&RunConfig::clip_norm, "clip_norm")},
      {"tie_embeddings", bool_field(&RunConfig::tie_embeddings, "tie_embeddings")},
      {"refresh_h1", bool_field(&RunConfig::refresh_h1, "refresh_h1")},
      {"share_states", bool_field(&RunConfig::share_states, "share_states")},
      {"train_path", string_field(&RunConfig::train_path)},
      {"dev_path", string_field(&RunConfig::dev_path)},
      {"test_path", string_field(&RunConfig::test_path)},
      {"checkpoint_path", string_field(&RunConfig::checkpoint_path)},
      {"log_path", string_field(&RunConfig::log_path)},
      {"format",
       {[](RunConfig &c, std::string_view v) {
          if (!v.empty()) parse_corpus_format(v);
          c.format = std::string(v);
        },
        [](const RunConfig &c) { return c.format; }}},
      {"dev_split", size_field(&RunConfig::dev_split, "dev_split")},
      {"normalize_digits", bool_field(&RunConfig::normalize_digits, "normalize_digits")},
      {"min_freq", size_field(&RunConfig::min_freq, "min_freq")},
      {"strict_chunks", bool_field(&RunConfig::strict_chunks, "strict_chunks")},
      {"atis_checks", bool_field(&RunConfig::atis_checks, "atis_checks")},
  };
  return table;
}

const Field &field(std::string_view key) {
  const std::string k = canonical_key(key);
  for (const auto &[name, f] : fields()) {
    if (name == k) return f;
  }
  throw UsageError("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  const std::string &source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(content).substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(content).substr(eq + 1)));
  }
  return out;
}

const std::vector<std::string> &RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto &[name, f] : fields()) v.push_back(name);
    return v;
  }();
  return names;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  field(key).set(*this, trim(value));
  assigned.insert(canonical_key(key));
}

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

void RunConfig::apply_text(std::string_view text, const std::string &source) {
  for (const auto &[key, value] : parse_key_values(text, source)) set(key, value);
}

void RunConfig::apply_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  // Relative paths inside the file are relative to the file itself.
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (auto [key, value] : parse_key_values(buf.str(), path)) {
    const std::string k = canonical_key(key);
    if (k.size() > 5 && k.ends_with("_path") && !value.empty() &&
        std::filesystem::path(value).is_relative()) {
      value = (base / value).lexically_normal().string();
    }
    set(key, value);
  }
}

void RunConfig::apply_seed_fallback() {
  if (assigned.count("seed")) return;
  if (const char *env = std::getenv("BIMODEL_SEED"); env && *env) {
    seed = parse_u64("BIMODEL_SEED", env);
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto &[name, f] : fields()) out += name + " = " + f.get(*this) + "\n";
  return out;
}

ModelConfig RunConfig::model_config(const Vocabulary &vocab) const {
  ModelConfig m;
  m.variant = variant;
  m.vocab_size = vocab.words.size();
  m.num_intents = vocab.intents.size();
  m.num_tags = vocab.tags.size();
  m.hidden_dim = hidden_dim;
  m.num_layers = num_layers;
  m.embed_dim = embed_dim;
  m.label_embed_dim = label_embed_dim;
  m.tie_embeddings = tie_embeddings;
  m.share_states = share_states;
  m.seed = seed;
  m.init_range = init_range;
  return m;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions t;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.clip_norm = clip_norm;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.refresh_h1 = refresh_h1;
  t.seed = seed;
  t.scheme = chunk_scheme();
  return t;
}

LoadOptions RunConfig::load_options() const {
  LoadOptions l;
  l.normalize_digits = normalize_digits;
  return l;
}

ChunkScheme RunConfig::chunk_scheme() const {
  return strict_chunks ? ChunkScheme::kStrict : ChunkScheme::kConlleval;
}

CorpusFormat RunConfig::format_for(const std::string &path) const {
  return format.empty() ? guess_corpus_format(path) : parse_corpus_format(format);
}

std::string RunConfig::effective_log_path() const {
  return log_path.empty() ? checkpoint_path + ".log.jsonl" : log_path;
}

std::string model_config_to_text(const ModelConfig &c) {
  std::ostringstream out;
  out << "variant = " << variant_name(c.variant) << "\n"
      << "vocab_size = " << c.vocab_size << "\n"
      << "num_intents = " << c.num_intents << "\n"
      << "num_tags = " << c.num_tags << "\n"
      << "hidden_dim = " << c.hidden_dim << "\n"
      << "num_layers = " << c.num_layers << "\n"
      << "embed_dim = " << c.embed_dim << "\n"
      << "label_embed_dim = " << c.label_embed_dim << "\n"
      << "tie_embeddings = " << (c.tie_embeddings ? "true" : "false") << "\n"
      << "share_states = " << (c.share_states ? "true" : "false") << "\n"
      << "seed = " << c.seed << "\n"
      << "init_range = " << format_double(c.init_range) << "\n";
  return out.str();
}

ModelConfig model_config_from_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  for (auto &[k, v] : parse_key_values(text, "model config")) kv[k] = v;
  auto need = [&](const char *key) -> const std::string & {
    auto it = kv.find(key);
    if (it == kv.end()) throw CheckpointError(std::string("checkpoint model config lacks ") + key);
    return it->second;
  };
  ModelConfig c;
  try {
    c.variant = parse_variant(need("variant"));
    c.vocab_size = parse_size("vocab_size", need("vocab_size"));
    c.num_intents = parse_size("num_intents", need("num_intents"));
    c.num_tags = parse_size("num_tags", need("num_tags"));
    c.hidden_dim = parse_size("hidden_dim", need("hidden_dim"));
    c.num_layers = parse_size("num_layers", need("num_layers"));
    c.embed_dim = parse_size("embed_dim", need("embed_dim"));
    c.label_embed_dim = parse_size("label_embed_dim", need("label_embed_dim"));
    c.tie_embeddings = parse_bool("tie_embeddings", need("tie_embeddings"));
    c.share_states = parse_bool("share_states", need("share_states"));
    c.seed = parse_u64("seed", need("seed"));
    c.init_range = parse_double("init_range", need("init_range"));
  } catch (const UsageError &e) {
    throw CheckpointError(std::string("checkpoint model config: ") + e.what());
  }
  return c;
}

}  // namespace bimodel
