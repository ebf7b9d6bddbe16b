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

#ifndef BIMODEL_CHECKPOINT_H_
#define BIMODEL_CHECKPOINT_H_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "bimodel.h"
#include "data.h"

namespace bimodel {

inline constexpr char kCheckpointMagic[8] = {'B', 'I', 'M', 'O', 'D', 'E', 'L', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<BiModel<float>> model;
  Vocabulary vocab;
  std::string run_config;  // effective RunConfig text at training time
};

// Layout (all integers little-endian u32):
//   magic[8] version
//   len model_config_text  len run_config_text
//   3 x symbol table (words, tags, intents):
//     reserved_count count { len bytes }*
//   tensor_count { len name rank dims[rank] f32[numel] }*
//   crc32 of every preceding byte
std::string serialize_checkpoint(const BiModel<float> &model, const Vocabulary &vocab,
                                 std::string_view run_config);
Checkpoint deserialize_checkpoint(std::string_view bytes);

// Writes through a temporary file, so a failed save leaves no partial file.
void save_checkpoint(const std::string &path, const BiModel<float> &model,
                     const Vocabulary &vocab, std::string_view run_config);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace bimodel

#endif  // BIMODEL_CHECKPOINT_H_
