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

#ifndef BIMODEL_DATA_H_
#define BIMODEL_DATA_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bimodel {

// Reference sizes of the canonical ATIS splits.
inline constexpr std::size_t kAtisTrainUtterances = 4978;
inline constexpr std::size_t kAtisTestUtterances = 893;
inline constexpr std::size_t kAtisIntents = 18;
inline constexpr std::size_t kAtisSlotLabels = 127;

struct Utterance {
  std::vector<std::string> tokens;
  std::vector<std::string> slot_tags;  // IOB, aligned 1:1 with tokens
  std::string intent;

  bool operator==(const Utterance &) const = default;
};

enum class CorpusFormat { kConll, kJsonl };

// "conll" or "jsonl"; anything else is a UsageError.
CorpusFormat parse_corpus_format(std::string_view name);
// jsonl for *.jsonl / *.json, conll otherwise.
CorpusFormat guess_corpus_format(std::string_view path);
const char *corpus_format_name(CorpusFormat format);

struct LoadOptions {
  bool lowercase = true;
  bool normalize_digits = false;
};

std::string normalize_token(std::string_view token, const LoadOptions &options);

// O, B-<type> or I-<type> with a non-empty type.
bool is_valid_slot_tag(std::string_view tag);

std::vector<Utterance> parse_corpus(std::istream &in, CorpusFormat format,
                                    const LoadOptions &options = {},
                                    const std::string &source = "<stream>");
std::vector<Utterance> load_corpus(const std::string &path, CorpusFormat format,
                                   const LoadOptions &options = {});
void write_corpus(std::ostream &out, std::span<const Utterance> corpus, CorpusFormat format);
void write_corpus(const std::string &path, std::span<const Utterance> corpus,
                  CorpusFormat format);

// Bidirectional symbol <-> id map. Ids below reserved_count() have display
// names only and are never returned by find(), so corpus symbols that happen
// to spell a reserved name still get their own id.
class SymbolTable {
 public:
  SymbolTable() = default;
  explicit SymbolTable(std::vector<std::string> reserved_names);

  static SymbolTable from_symbols(std::vector<std::string> symbols, std::size_t reserved_count);

  std::int32_t add(const std::string &symbol);
  // -1 when absent.
  std::int32_t find(std::string_view symbol) const;
  const std::string &symbol(std::int32_t id) const;

  std::size_t size() const { return symbols_.size(); }
  std::size_t reserved_count() const { return reserved_; }
  const std::vector<std::string> &symbols() const { return symbols_; }

  bool operator==(const SymbolTable &other) const {
    return reserved_ == other.reserved_ && symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::size_t reserved_ = 0;
};

struct Vocabulary {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;  // words
  static constexpr std::int32_t kBos = 1;  // slot labels

  SymbolTable words;
  SymbolTable tags;
  SymbolTable intents;

  std::size_t num_slot_labels() const { return tags.size() - tags.reserved_count(); }
  std::int32_t word_id(std::string_view token) const;

  bool operator==(const Vocabulary &) const = default;
};

// Ids ordered by descending frequency, ties broken lexicographically. Words
// seen fewer than min_freq times are left out (they encode as UNK).
Vocabulary build_vocab(std::span<const Utterance> train, std::size_t min_freq = 1);

// Column-major over time: element [t][b] lives at t * batch_size + b.
struct Batch {
  std::size_t seq_len = 0;
  std::size_t batch_size = 0;
  std::vector<std::int32_t> word_ids;
  std::vector<std::int32_t> tag_ids;
  std::vector<std::int32_t> intent_ids;  // -1 for intents unknown to the vocabulary
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> source_index;  // position of each row in the input corpus

  std::size_t at(std::size_t t, std::size_t b) const { return t * batch_size + b; }
  std::span<const std::int32_t> words_at(std::size_t t) const {
    return {word_ids.data() + t * batch_size, batch_size};
  }
  std::span<const std::int32_t> tags_at(std::size_t t) const {
    return {tag_ids.data() + t * batch_size, batch_size};
  }
  std::span<const std::uint8_t> mask_at(std::size_t t) const {
    return {mask.data() + t * batch_size, batch_size};
  }
};

struct EncodeStats {
  std::size_t tokens = 0;
  std::size_t oov_tokens = 0;
  std::size_t unseen_tags = 0;
  std::size_t unseen_intents = 0;
};

// Pads to the longest row. Unknown words become UNK, unknown slot tags PAD,
// unknown intents -1; each substitution is counted in stats.
Batch encode_batch(std::span<const Utterance *const> rows, const Vocabulary &vocab,
                   EncodeStats *stats = nullptr);

// Groups similar lengths together and pads per batch. With a seed the
// assignment and the batch order are shuffled deterministically; without one
// the batches follow ascending length.
std::vector<Batch> make_batches(std::span<const Utterance> data, const Vocabulary &vocab,
                                std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed = std::nullopt,
                                EncodeStats *stats = nullptr);

std::vector<std::string> decode_words(const Batch &batch, std::size_t row,
                                      const Vocabulary &vocab);

struct TrainDevSplit {
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
};

// Moves the last dev_count utterances into the dev set.
TrainDevSplit split_off_dev(std::vector<Utterance> train, std::size_t dev_count);

// Human-readable notes for every way the given counts differ from the
// canonical ATIS splits. Empty when everything matches.
std::vector<std::string> atis_count_warnings(std::size_t train_utterances,
                                             std::size_t test_utterances, std::size_t intents,
                                             std::size_t slot_labels);

}  // namespace bimodel

#endif  // BIMODEL_DATA_H_
