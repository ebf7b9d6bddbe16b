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

#include "data.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "errors.h"

namespace bimodel {
namespace {

constexpr std::string_view kIntentPrefix = "# intent: ";

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

void finish_utterance(Utterance &u, const LoadOptions &options, const std::string &where) {
  if (u.tokens.empty()) throw ParseError(where + ": utterance has no tokens");
  if (u.tokens.size() != u.slot_tags.size()) {
    throw ParseError(where + ": " + std::to_string(u.tokens.size()) + " tokens but " +
                     std::to_string(u.slot_tags.size()) + " slot tags");
  }
  for (const std::string &tag : u.slot_tags) {
    if (!is_valid_slot_tag(tag)) throw ParseError(where + ": invalid slot tag '" + tag + "'");
  }
  if (u.intent.empty()) throw ParseError(where + ": missing intent");
  for (std::string &tok : u.tokens) tok = normalize_token(tok, options);
}

std::vector<Utterance> parse_conll(std::istream &in, const LoadOptions &options,
                                   const std::string &source) {
  std::vector<Utterance> corpus;
  std::string line;
  std::size_t line_no = 0;
  std::size_t block_no = 0;
  std::size_t block_start = 0;
  bool in_block = false;
  Utterance current;
  bool ragged = false;
  std::size_t ragged_line = 0;

  auto where = [&]() {
    return source + ": block " + std::to_string(block_no) + " (line " +
           std::to_string(block_start) + ")";
  };
  auto close_block = [&]() {
    if (!in_block) return;
    if (ragged) {
      throw ParseError(where() + ": ragged token/tag columns at line " +
                       std::to_string(ragged_line) + " (" + std::to_string(current.tokens.size()) +
                       " tokens, " + std::to_string(current.slot_tags.size()) + " tags)");
    }
    finish_utterance(current, options, where());
    corpus.push_back(std::move(current));
    current = Utterance{};
    in_block = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (is_blank(line)) {
      close_block();
      continue;
    }
    if (!in_block) {
      in_block = true;
      ++block_no;
      block_start = line_no;
      ragged = false;
      if (line.rfind(kIntentPrefix, 0) != 0) {
        throw ParseError(where() + ": block must start with '# intent: <label>'");
      }
      current.intent = line.substr(kIntentPrefix.size());
      continue;
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      current.tokens.push_back(line);
      if (!ragged) ragged_line = line_no;
      ragged = true;
      continue;
    }
    std::string token = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    if (token.empty()) {
      if (!ragged) ragged_line = line_no;
      ragged = true;
    } else {
      current.tokens.push_back(std::move(token));
    }
    if (tag.empty()) {
      if (!ragged) ragged_line = line_no;
      ragged = true;
    } else {
      current.slot_tags.push_back(std::move(tag));
    }
  }
  close_block();
  return corpus;
}

std::vector<std::string> string_array(const nlohmann::json &j, const char *key,
                                      const std::string &where) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw ParseError(where + ": missing array '" + key + "'");
  }
  std::vector<std::string> out;
  for (const auto &item : j[key]) {
    if (!item.is_string()) throw ParseError(where + ": non-string entry in '" + key + "'");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<Utterance> parse_jsonl(std::istream &in, const LoadOptions &options,
                                   const std::string &source) {
  std::vector<Utterance> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (is_blank(line)) continue;
    const std::string where = source + ": line " + std::to_string(line_no);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(where + ": not a JSON object");
    Utterance u;
    u.tokens = string_array(j, "tokens", where);
    u.slot_tags = string_array(j, "slots", where);
    if (!j.contains("intent") || !j["intent"].is_string()) {
      throw ParseError(where + ": missing string 'intent'");
    }
    u.intent = j["intent"].get<std::string>();
    finish_utterance(u, options, where);
    corpus.push_back(std::move(u));
  }
  return corpus;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "conll") return CorpusFormat::kConll;
  if (name == "jsonl") return CorpusFormat::kJsonl;
  throw UsageError("unknown corpus format '" + std::string(name) + "' (expected conll or jsonl)");
}

CorpusFormat guess_corpus_format(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.substr(path.size() - suffix.size()) == suffix;
  };
  return ends_with(".jsonl") || ends_with(".json") ? CorpusFormat::kJsonl : CorpusFormat::kConll;
}

const char *corpus_format_name(CorpusFormat format) {
  return format == CorpusFormat::kJsonl ? "jsonl" : "conll";
}

std::string normalize_token(std::string_view token, const LoadOptions &options) {
  std::string out(token);
  for (char &c : out) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (options.lowercase && u < 0x80) c = static_cast<char>(std::tolower(u));
    if (options.normalize_digits && std::isdigit(u)) c = '0';
  }
  return out;
}

bool is_valid_slot_tag(std::string_view tag) {
  if (tag == "O") return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

std::vector<Utterance> parse_corpus(std::istream &in, CorpusFormat format,
                                    const LoadOptions &options, const std::string &source) {
  return format == CorpusFormat::kConll ? parse_conll(in, options, source)
                                        : parse_jsonl(in, options, source);
}

std::vector<Utterance> load_corpus(const std::string &path, CorpusFormat format,
                                   const LoadOptions &options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file '" + path + "'");
  return parse_corpus(in, format, options, path);
}

void write_corpus(std::ostream &out, std::span<const Utterance> corpus, CorpusFormat format) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Utterance &u = corpus[i];
    if (format == CorpusFormat::kConll) {
      if (i) out << '\n';
      out << kIntentPrefix << u.intent << '\n';
      for (std::size_t t = 0; t < u.tokens.size(); ++t) {
        out << u.tokens[t] << '\t' << u.slot_tags.at(t) << '\n';
      }
    } else {
      nlohmann::json j = {{"tokens", u.tokens}, {"slots", u.slot_tags}, {"intent", u.intent}};
      out << j.dump() << '\n';
    }
  }
}

void write_corpus(const std::string &path, std::span<const Utterance> corpus,
                  CorpusFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file '" + path + "'");
  write_corpus(out, corpus, format);
}

SymbolTable::SymbolTable(std::vector<std::string> reserved_names)
    : symbols_(std::move(reserved_names)), reserved_(symbols_.size()) {}

SymbolTable SymbolTable::from_symbols(std::vector<std::string> symbols,
                                      std::size_t reserved_count) {
  if (reserved_count > symbols.size()) {
    throw ContractError("symbol table: reserved count exceeds table size");
  }
  SymbolTable table(std::vector<std::string>(symbols.begin(), symbols.begin() + reserved_count));
  for (std::size_t i = reserved_count; i < symbols.size(); ++i) {
    if (table.find(symbols[i]) >= 0) {
      throw ContractError("symbol table: duplicate symbol '" + symbols[i] + "'");
    }
    table.add(symbols[i]);
  }
  return table;
}

std::int32_t SymbolTable::add(const std::string &symbol) {
  auto [it, inserted] = index_.emplace(symbol, static_cast<std::int32_t>(symbols_.size()));
  if (inserted) symbols_.push_back(symbol);
  return it->second;
}

std::int32_t SymbolTable::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? -1 : it->second;
}

const std::string &SymbolTable::symbol(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw IndexError("symbol id " + std::to_string(id) + " out of range");
  }
  return symbols_[id];
}

std::int32_t Vocabulary::word_id(std::string_view token) const {
  const std::int32_t id = words.find(token);
  return id < 0 ? kUnk : id;
}

namespace {

void add_by_frequency(SymbolTable &table, const std::map<std::string, std::size_t> &counts,
                      std::size_t min_freq) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  for (const auto &[symbol, count] : items) {
    if (count >= min_freq) table.add(symbol);
  }
}

}  // namespace

Vocabulary build_vocab(std::span<const Utterance> train, std::size_t min_freq) {
  if (train.empty()) throw ContractError("build_vocab: empty training corpus");
  std::map<std::string, std::size_t> word_counts, tag_counts, intent_counts;
  for (const Utterance &u : train) {
    for (const std::string &w : u.tokens) ++word_counts[w];
    for (const std::string &t : u.slot_tags) ++tag_counts[t];
    ++intent_counts[u.intent];
  }
  Vocabulary vocab;
  vocab.words = SymbolTable({"<pad>", "<unk>"});
  vocab.tags = SymbolTable({"<pad>", "<bos>"});
  vocab.intents = SymbolTable(std::vector<std::string>{});
  add_by_frequency(vocab.words, word_counts, std::max<std::size_t>(min_freq, 1));
  add_by_frequency(vocab.tags, tag_counts, 1);
  add_by_frequency(vocab.intents, intent_counts, 1);
  return vocab;
}

Batch encode_batch(std::span<const Utterance *const> rows, const Vocabulary &vocab,
                   EncodeStats *stats) {
  if (rows.empty()) throw ContractError("encode_batch: no utterances");
  Batch batch;
  batch.batch_size = rows.size();
  for (const Utterance *u : rows) {
    if (u->tokens.empty()) throw ContractError("encode_batch: empty utterance");
    if (u->tokens.size() != u->slot_tags.size()) {
      throw ContractError("encode_batch: token/tag length mismatch");
    }
    batch.seq_len = std::max(batch.seq_len, u->tokens.size());
  }
  const std::size_t cells = batch.seq_len * batch.batch_size;
  batch.word_ids.assign(cells, Vocabulary::kPad);
  batch.tag_ids.assign(cells, Vocabulary::kPad);
  batch.mask.assign(cells, 0);
  EncodeStats local;
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const Utterance &u = *rows[b];
    batch.lengths.push_back(u.tokens.size());
    for (std::size_t t = 0; t < u.tokens.size(); ++t) {
      const std::size_t i = batch.at(t, b);
      const std::int32_t w = vocab.words.find(u.tokens[t]);
      batch.word_ids[i] = w < 0 ? Vocabulary::kUnk : w;
      if (w < 0) ++local.oov_tokens;
      const std::int32_t tag = vocab.tags.find(u.slot_tags[t]);
      batch.tag_ids[i] = tag < 0 ? Vocabulary::kPad : tag;
      if (tag < 0) ++local.unseen_tags;
      batch.mask[i] = 1;
      ++local.tokens;
    }
    const std::int32_t intent = vocab.intents.find(u.intent);
    batch.intent_ids.push_back(intent);
    if (intent < 0) ++local.unseen_intents;
  }
  if (stats) {
    stats->tokens += local.tokens;
    stats->oov_tokens += local.oov_tokens;
    stats->unseen_tags += local.unseen_tags;
    stats->unseen_intents += local.unseen_intents;
  }
  return batch;
}

std::vector<Batch> make_batches(std::span<const Utterance> data, const Vocabulary &vocab,
                                std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed,
                                EncodeStats *stats) {
  if (batch_size == 0) throw ContractError("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(shuffle_seed.value_or(0));
  if (shuffle_seed) std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].tokens.size() < data[b].tokens.size();
  });

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<const Utterance *> rows;
    for (std::size_t i = start; i < end; ++i) rows.push_back(&data[order[i]]);
    Batch batch = encode_batch(rows, vocab, stats);
    batch.source_index.assign(order.begin() + start, order.begin() + end);
    batches.push_back(std::move(batch));
  }
  if (shuffle_seed) std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

std::vector<std::string> decode_words(const Batch &batch, std::size_t row,
                                      const Vocabulary &vocab) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < batch.lengths.at(row); ++t) {
    out.push_back(vocab.words.symbol(batch.word_ids[batch.at(t, row)]));
  }
  return out;
}

TrainDevSplit split_off_dev(std::vector<Utterance> train, std::size_t dev_count) {
  if (dev_count >= train.size()) {
    throw UsageError("dev split of " + std::to_string(dev_count) +
                     " utterances leaves no training data (corpus has " +
                     std::to_string(train.size()) + ")");
  }
  TrainDevSplit split;
  split.dev.assign(std::make_move_iterator(train.end() - dev_count),
                   std::make_move_iterator(train.end()));
  train.resize(train.size() - dev_count);
  split.train = std::move(train);
  return split;
}

std::vector<std::string> atis_count_warnings(std::size_t train_utterances,
                                             std::size_t test_utterances, std::size_t intents,
                                             std::size_t slot_labels) {
  std::vector<std::string> notes;
  auto check = [&](const char *what, std::size_t got, std::size_t want) {
    if (got != want) {
      notes.push_back(std::string(what) + ": found " + std::to_string(got) + ", canonical ATIS has " +
                      std::to_string(want));
    }
  };
  check("training utterances", train_utterances, kAtisTrainUtterances);
  check("test utterances", test_utterances, kAtisTestUtterances);
  check("intent classes", intents, kAtisIntents);
  check("slot labels", slot_labels, kAtisSlotLabels);
  return notes;
}

}  // namespace bimodel
