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

#ifndef BIMODEL_GRADCHECK_H_
#define BIMODEL_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace bimodel {

struct GradcheckOptions {
  std::size_t hidden_dim = 8;
  std::size_t vocab_size = 20;  // including PAD and UNK
  std::size_t embed_dim = 8;
  std::size_t label_embed_dim = 4;
  std::size_t num_layers = 2;
  std::size_t num_intents = 4;
  std::size_t num_tags = 7;  // including PAD and BOS
  double step = 1e-4;
  double threshold = 1e-3;
  // Relative errors are taken against max(|analytic|, |numeric|, floor).
  double floor = 1e-7;
  std::uint64_t seed = 7;
  // Test fixture: scale this parameter's analytic gradient by 1.5 before
  // comparing. Empty disables.
  std::string corrupt_parameter;

  // "small": hidden 8, vocab 20. "tiny": hidden 3, vocab 8.
  static GradcheckOptions preset(std::string_view size);
};

struct GradcheckGroup {
  std::string variant;
  std::string loss;   // L1 or L2
  std::string group;  // parameter name up to its second '/'
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_parameter;  // name[index]
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // variant L? name[index]
  double threshold = 0.0;

  bool passed() const { return max_rel_error < threshold; }
  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Compares every parameter gradient of both losses, in both model variants,
// against central differences in double precision. Shared states are held at
// their initial values (they are detached inputs to each loss).
GradcheckReport run_gradcheck(const GradcheckOptions &options);

}  // namespace bimodel

#endif  // BIMODEL_GRADCHECK_H_
