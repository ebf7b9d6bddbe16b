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

#include <numeric>
#include <set>
#include <sstream>

#include "data.h"
#include "doctest.h"
#include "errors.h"
#include "test_util.h"

using namespace bimodel;
using bimodel::testing::TempDir;
using bimodel::testing::toy_corpus;

namespace {

std::vector<Utterance> parse(const std::string &text, CorpusFormat format = CorpusFormat::kConll,
                             const LoadOptions &options = {}) {
  std::istringstream in(text);
  return parse_corpus(in, format, options, "mem");
}

std::string parse_error(const std::string &text, CorpusFormat format = CorpusFormat::kConll) {
  try {
    parse(text, format);
  } catch (const ParseError &e) {
    return e.what();
  }
  return "";
}

Utterance utt(std::vector<std::string> tokens, std::string intent = "greet") {
  std::vector<std::string> tags(tokens.size(), "O");
  return {std::move(tokens), std::move(tags), std::move(intent)};
}

}  // namespace

TEST_CASE("conll parsing") {
  auto corpus = parse("# intent: atis_flight\nTo\tO\nDenver\tB-toloc.city_name\n\n"
                      "# intent: atis_airfare\r\nfare\tO\r\n");
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].tokens == std::vector<std::string>{"to", "denver"});
  CHECK(corpus[0].slot_tags == std::vector<std::string>{"O", "B-toloc.city_name"});
  CHECK(corpus[0].intent == "atis_flight");
  CHECK(corpus[1].intent == "atis_airfare");

  LoadOptions keep_case{false, true};
  auto raw = parse("# intent: x\nFlight123\tO\n", CorpusFormat::kConll, keep_case);
  CHECK(raw[0].tokens[0] == "Flight000");
}

TEST_CASE("malformed conll names the block and line") {
  const std::string ragged = parse_error("# intent: a\nx\tO\n\n# intent: b\ny\tO\nz\n");
  CHECK(ragged.find("block 2") != std::string::npos);
  CHECK(ragged.find("line 6") != std::string::npos);
  CHECK(parse_error("x\tO\n").find("# intent") != std::string::npos);
  CHECK(parse_error("# intent: a\nx\tB-\n").find("invalid slot tag") != std::string::npos);
  CHECK(parse_error("# intent: a\n\n").empty() == false);
  CHECK(parse_error("# intent: a\n\tO\n").find("ragged") != std::string::npos);
}

TEST_CASE("slot tag validity") {
  for (const char *tag : {"O", "B-x", "I-fromloc.city_name"}) CHECK(is_valid_slot_tag(tag));
  for (const char *tag : {"", "B-", "X-y", "o", "Bx", "I"}) CHECK_FALSE(is_valid_slot_tag(tag));
}

TEST_CASE("jsonl parsing and errors") {
  auto corpus = parse(R"({"tokens":["a","b"],"slots":["O","B-x"],"intent":"i"})"
                      "\n\n",
                      CorpusFormat::kJsonl);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].slot_tags[1] == "B-x");
  CHECK(!parse_error("{not json}\n", CorpusFormat::kJsonl).empty());
  CHECK(!parse_error(R"({"tokens":["a"],"slots":["O","O"],"intent":"i"})", CorpusFormat::kJsonl)
             .empty());
  CHECK(parse_error(R"({"tokens":["a"],"slots":["O"]})", CorpusFormat::kJsonl).find("intent") !=
        std::string::npos);
}

TEST_CASE("formats") {
  CHECK(parse_corpus_format("conll") == CorpusFormat::kConll);
  CHECK(parse_corpus_format("jsonl") == CorpusFormat::kJsonl);
  CHECK_THROWS_AS(parse_corpus_format("csv"), UsageError);
  CHECK(guess_corpus_format("a/b.jsonl") == CorpusFormat::kJsonl);
  CHECK(guess_corpus_format("a/b.json") == CorpusFormat::kJsonl);
  CHECK(guess_corpus_format("a/b.txt") == CorpusFormat::kConll);
  CHECK_THROWS_AS(load_corpus("/nonexistent/x.conll", CorpusFormat::kConll), IoError);
}

TEST_CASE("corpus round-trips through both formats") {
  const auto corpus = load_corpus(toy_corpus(), CorpusFormat::kConll);
  REQUIRE(corpus.size() == 10);
  TempDir dir("data");
  for (CorpusFormat format : {CorpusFormat::kConll, CorpusFormat::kJsonl}) {
    const std::string path = dir.file(std::string("c.") + corpus_format_name(format));
    write_corpus(path, corpus, format);
    CHECK(load_corpus(path, format) == corpus);
  }
}

TEST_CASE("symbol table") {
  SymbolTable t({"<pad>", "<unk>"});
  CHECK(t.find("<pad>") == -1);
  CHECK(t.add("<pad>") == 2);
  CHECK(t.add("a") == 3);
  CHECK(t.add("a") == 3);
  CHECK(t.symbol(0) == "<pad>");
  CHECK(t.find("a") == 3);
  CHECK_THROWS_AS(t.symbol(9), IndexError);
  CHECK(SymbolTable::from_symbols(t.symbols(), 2) == t);
  CHECK_THROWS_AS(SymbolTable::from_symbols({"a", "a"}, 0), ContractError);
  CHECK_THROWS_AS(SymbolTable::from_symbols({"a"}, 2), ContractError);
}

TEST_CASE("vocabulary") {
  const auto corpus = load_corpus(toy_corpus(), CorpusFormat::kConll);
  const Vocabulary a = build_vocab(corpus);
  CHECK(build_vocab(corpus) == a);
  CHECK(a.words.symbol(Vocabulary::kPad) == "<pad>");
  CHECK(a.words.symbol(Vocabulary::kUnk) == "<unk>");
  CHECK(a.tags.symbol(Vocabulary::kBos) == "<bos>");
  CHECK(a.intents.reserved_count() == 0);
  CHECK(a.word_id("never-seen") == Vocabulary::kUnk);

  SUBCASE("frequency order with lexicographic ties") {
    std::vector<Utterance> c{utt({"b", "a", "c"}), utt({"c", "b"}), utt({"c"})};
    const Vocabulary v = build_vocab(c);
    CHECK(v.words.symbols() == std::vector<std::string>{"<pad>", "<unk>", "c", "b", "a"});
  }

  SUBCASE("min_freq drops rare words") {
    std::vector<Utterance> c{utt({"a", "b"}), utt({"c", "d"})};
    const Vocabulary v = build_vocab(c, 2);
    CHECK(v.words.size() == 2);
    const auto batches = make_batches(c, v, 4);
    for (std::int32_t id : batches[0].word_ids) CHECK(id == Vocabulary::kUnk);
  }

  CHECK_THROWS_AS(build_vocab(std::vector<Utterance>{}), ContractError);
}

TEST_CASE("batching") {
  std::vector<Utterance> corpus;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    std::vector<std::string> toks(1 + rng() % 6);
    for (auto &t : toks) t = "w" + std::to_string(rng() % 5);
    corpus.push_back(utt(toks, i % 2 ? "a" : "b"));
  }
  const Vocabulary vocab = build_vocab(corpus);
  const auto batches = make_batches(corpus, vocab, 3, 11);
  std::multiset<std::size_t> sizes;
  std::set<std::size_t> seen;
  std::size_t total_len = 0, total_mask = 0;
  for (const Batch &b : batches) {
    sizes.insert(b.batch_size);
    CHECK(b.word_ids.size() == b.seq_len * b.batch_size);
    CHECK(b.seq_len == *std::max_element(b.lengths.begin(), b.lengths.end()));
    total_len += std::accumulate(b.lengths.begin(), b.lengths.end(), std::size_t{0});
    total_mask += std::accumulate(b.mask.begin(), b.mask.end(), std::size_t{0});
    for (std::size_t r = 0; r < b.batch_size; ++r) {
      const Utterance &u = corpus[b.source_index[r]];
      seen.insert(b.source_index[r]);
      CHECK(decode_words(b, r, vocab) == u.tokens);
      CHECK(b.intent_ids[r] == vocab.intents.find(u.intent));
      for (std::size_t t = 0; t < b.seq_len; ++t) {
        CHECK(b.mask[b.at(t, r)] == (t < u.tokens.size()));
        if (t >= u.tokens.size()) CHECK(b.word_ids[b.at(t, r)] == Vocabulary::kPad);
      }
    }
  }
  CHECK(sizes == std::multiset<std::size_t>{1, 3, 3, 3});
  CHECK(total_len == total_mask);
  CHECK(seen.size() == 10);

  auto order = [](const std::vector<Batch> &bs) {
    std::vector<std::size_t> o;
    for (const Batch &b : bs) o.insert(o.end(), b.source_index.begin(), b.source_index.end());
    return o;
  };
  CHECK(order(make_batches(corpus, vocab, 3, 11)) == order(batches));
  CHECK(order(make_batches(corpus, vocab, 3, 12)) != order(batches));
  CHECK_THROWS_AS(make_batches(corpus, vocab, 0), ContractError);
}

TEST_CASE("unknown symbols are counted") {
  std::vector<Utterance> train{utt({"a", "b"}, "x")};
  const Vocabulary vocab = build_vocab(train);
  Utterance test = utt({"a", "zz", "yy"}, "unseen");
  test.slot_tags[0] = "B-new";
  const Utterance *rows[] = {&test};
  EncodeStats stats;
  const Batch b = encode_batch(rows, vocab, &stats);
  CHECK(stats.tokens == 3);
  CHECK(stats.oov_tokens == 2);
  CHECK(stats.unseen_tags == 1);
  CHECK(stats.unseen_intents == 1);
  CHECK(b.intent_ids[0] == -1);
  CHECK(b.tag_ids[0] == Vocabulary::kPad);
}

TEST_CASE("dev split and ATIS warnings") {
  std::vector<Utterance> c;
  for (int i = 0; i < 5; ++i) c.push_back(utt({"w" + std::to_string(i)}));
  auto split = split_off_dev(c, 2);
  CHECK(split.train.size() == 3);
  REQUIRE(split.dev.size() == 2);
  CHECK(split.dev[0].tokens[0] == "w3");
  CHECK_THROWS_AS(split_off_dev(c, 5), UsageError);

  CHECK(atis_count_warnings(4978, 893, 18, 127).empty());
  CHECK(atis_count_warnings(5, 893, 1, 1).size() == 3);
  const auto notes = atis_count_warnings(4978, 892, 18, 120);
  REQUIRE(notes.size() == 2);
  CHECK(notes[0] == "test utterances: found 892, canonical ATIS has 893");
}
