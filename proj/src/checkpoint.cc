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

#include "checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "config.h"
#include "errors.h"

namespace bimodel {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void bytes(const void *p, std::size_t n) { out_.append(static_cast<const char *>(p), n); }
  std::string &data() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void bytes(void *p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw CheckpointError("checkpoint is truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t i = 0; i < bytes.size(); i += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - i);
    crc = crc32(crc, reinterpret_cast<const Bytef *>(bytes.data() + i), static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

void write_table(Writer &w, const SymbolTable &table) {
  w.u32(static_cast<std::uint32_t>(table.reserved_count()));
  w.u32(static_cast<std::uint32_t>(table.size()));
  for (const std::string &s : table.symbols()) w.str(s);
}

SymbolTable read_table(Reader &r) {
  const std::uint32_t reserved = r.u32();
  const std::uint32_t count = r.u32();
  if (reserved > count) throw CheckpointError("checkpoint symbol table is malformed");
  std::vector<std::string> symbols;
  symbols.reserve(std::min<std::size_t>(count, r.remaining()));
  for (std::uint32_t i = 0; i < count; ++i) symbols.push_back(r.str());
  try {
    return SymbolTable::from_symbols(std::move(symbols), reserved);
  } catch (const Error &e) {
    throw CheckpointError(std::string("checkpoint symbol table: ") + e.what());
  }
}

}  // namespace

std::string serialize_checkpoint(const BiModel<float> &model, const Vocabulary &vocab,
                                 std::string_view run_config) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(model_config_to_text(model.config()));
  w.str(run_config);
  write_table(w, vocab.words);
  write_table(w, vocab.tags);
  write_table(w, vocab.intents);
  const NamedParams<float> params = model.named_parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto &[name, tensor] : params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.bytes(tensor.values().data(), tensor.size() * sizeof(float));
  }
  w.u32(crc_of(w.data()));
  return std::move(w.data());
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 8 ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  Reader header(bytes.substr(sizeof kCheckpointMagic));
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) +
                          ")");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (stored != crc_of(body)) throw CheckpointError("checkpoint checksum mismatch (corrupted file)");

  Reader r(body.substr(sizeof kCheckpointMagic + 4));
  Checkpoint ck;
  const ModelConfig config = model_config_from_text(r.str());
  ck.run_config = r.str();
  ck.vocab.words = read_table(r);
  ck.vocab.tags = read_table(r);
  ck.vocab.intents = read_table(r);
  if (ck.vocab.words.size() != config.vocab_size || ck.vocab.tags.size() != config.num_tags ||
      ck.vocab.intents.size() != config.num_intents) {
    throw CheckpointError("checkpoint vocabularies disagree with its model config");
  }

  ck.model = std::make_unique<BiModel<float>>(config);
  std::map<std::string, Tensor<float>> by_name;
  for (auto &[name, t] : ck.model->named_parameters()) by_name.emplace(name, t);

  const std::uint32_t count = r.u32();
  if (count != by_name.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                          std::to_string(by_name.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointError("checkpoint tensor '" + name + "' is unknown");
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto &d : shape) d = r.u32();
    Tensor<float> &target = it->second;
    if (shape != target.shape()) {
      throw CheckpointError("checkpoint tensor '" + name + "' has shape " + shape_string(shape) +
                            ", model expects " + shape_string(target.shape()));
    }
    r.bytes(target.mutable_values().data(), target.size() * sizeof(float));
    by_name.erase(it);
  }
  if (r.remaining() != 0) throw CheckpointError("checkpoint has trailing bytes");
  return ck;
}

void save_checkpoint(const std::string &path, const BiModel<float> &model,
                     const Vocabulary &vocab, std::string_view run_config) {
  const std::string bytes = serialize_checkpoint(model, vocab, run_config);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot write checkpoint '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace bimodel
