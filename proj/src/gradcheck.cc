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

#include "gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "bimodel.h"
#include "errors.h"

namespace bimodel {
namespace {

std::string group_of(const std::string &name) {
  const auto first = name.find('/');
  if (first == std::string::npos) return name;
  const auto second = name.find('/', first + 1);
  return second == std::string::npos ? name : name.substr(0, second);
}

Batch random_batch(const GradcheckOptions &o, std::mt19937_64 &rng) {
  // Two rows of unequal length so padding is exercised.
  const std::vector<std::size_t> lengths{3, 2};
  std::uniform_int_distribution<std::int32_t> word(2, static_cast<std::int32_t>(o.vocab_size) - 1);
  std::uniform_int_distribution<std::int32_t> tag(2, static_cast<std::int32_t>(o.num_tags) - 1);
  std::uniform_int_distribution<std::int32_t> intent(0, static_cast<std::int32_t>(o.num_intents) - 1);
  Batch b;
  b.seq_len = 3;
  b.batch_size = lengths.size();
  b.lengths = lengths;
  b.word_ids.assign(b.seq_len * b.batch_size, Vocabulary::kPad);
  b.tag_ids.assign(b.seq_len * b.batch_size, Vocabulary::kPad);
  b.mask.assign(b.seq_len * b.batch_size, 0);
  for (std::size_t r = 0; r < b.batch_size; ++r) {
    b.intent_ids.push_back(intent(rng));
    b.source_index.push_back(r);
    for (std::size_t t = 0; t < lengths[r]; ++t) {
      b.word_ids[b.at(t, r)] = word(rng);
      b.tag_ids[b.at(t, r)] = tag(rng);
      b.mask[b.at(t, r)] = 1;
    }
  }
  return b;
}

struct Accumulator {
  const GradcheckOptions &options;
  GradcheckReport &report;
  std::map<std::string, std::size_t> index;
  bool corrupted = false;

  void add(const std::string &variant, const std::string &loss, const std::string &name,
           std::size_t element, double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), options.floor});
    const double err = std::abs(analytic - numeric) / scale;
    const std::string key = variant + "|" + loss + "|" + group_of(name);
    auto [it, fresh] = index.emplace(key, report.groups.size());
    if (fresh) report.groups.push_back({variant, loss, group_of(name), 0, 0.0, ""});
    GradcheckGroup &g = report.groups[it->second];
    const std::string where = name + "[" + std::to_string(element) + "]";
    ++g.checked;
    ++report.checked;
    if (g.worst_parameter.empty() || err > g.max_rel_error) {
      g.max_rel_error = err;
      g.worst_parameter = where;
    }
    if (report.worst.empty() || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst = variant + " " + loss + " " + where;
    }
  }
};

// Checks every element of every parameter whose name passes `owned` against
// central differences of `loss_fn`.
void check_loss(const GradcheckOptions &o, Accumulator &acc, const BiModel<double> &model,
                const std::string &loss_name,
                const std::function<Tensor<double>(Tape<double> &)> &loss_fn,
                const std::function<bool(const std::string &)> &owned) {
  NamedParams<double> params = model.named_parameters();
  for (auto &[name, t] : params) t.clear_grad();
  {
    Tape<double> tape;
    Tensor<double> loss = loss_fn(tape);
    tape.backward(loss);
  }
  const std::string variant = variant_name(model.config().variant);
  auto evaluate = [&] {
    Tape<double> tape(Tape<double>::Mode::kInference);
    return loss_fn(tape).item();
  };
  for (auto &[name, t] : params) {
    if (!owned(name)) continue;
    const double corrupt = name == o.corrupt_parameter ? 1.5 : 1.0;
    acc.corrupted = acc.corrupted || corrupt != 1.0;
    std::vector<double> analytic(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + o.step;
      const double plus = evaluate();
      values[i] = saved - o.step;
      const double minus = evaluate();
      values[i] = saved;
      acc.add(variant, loss_name, name, i, corrupt * analytic[i], (plus - minus) / (2 * o.step));
    }
    t.clear_grad();
  }
}

}  // namespace

GradcheckOptions GradcheckOptions::preset(std::string_view size) {
  GradcheckOptions o;
  if (size == "small") return o;
  if (size == "tiny") {
    o.hidden_dim = 3;
    o.vocab_size = 8;
    o.embed_dim = 3;
    o.label_embed_dim = 2;
    o.num_intents = 3;
    o.num_tags = 5;
    return o;
  }
  throw UsageError("unknown gradcheck size '" + std::string(size) + "' (expected small or tiny)");
}

GradcheckReport run_gradcheck(const GradcheckOptions &o) {
  GradcheckReport report;
  report.threshold = o.threshold;
  Accumulator acc{o, report, {}, false};
  std::mt19937_64 rng(o.seed);
  const Batch batch = random_batch(o, rng);

  for (Variant variant : {Variant::kWithDecoder, Variant::kWithoutDecoder}) {
    ModelConfig c;
    c.variant = variant;
    c.vocab_size = o.vocab_size;
    c.num_intents = o.num_intents;
    c.num_tags = o.num_tags;
    c.hidden_dim = o.hidden_dim;
    c.num_layers = o.num_layers;
    c.embed_dim = o.embed_dim;
    c.label_embed_dim = o.label_embed_dim;
    c.seed = o.seed;
    BiModel<double> model(c);
    // Wider than the training initialization, so the nonlinearities leave
    // their near-linear region.
    std::uniform_real_distribution<double> wide(-0.5, 0.5);
    for (auto &[name, t] : model.named_parameters()) {
      for (double &v : t.mutable_values()) v = wide(rng);
    }
    const SharedStates<double> shared = model.compute_shared_states(batch);

    check_loss(
        o, acc, model, "L1",
        [&](Tape<double> &tape) {
          return intent_loss(tape, model.predict_intent(tape, batch, shared), batch.intent_ids);
        },
        [](const std::string &name) { return name.rfind("slot/", 0) != 0; });
    check_loss(
        o, acc, model, "L2",
        [&](Tape<double> &tape) {
          Tensor<double> logits =
              model.predict_slots(tape, batch, shared, std::span<const std::int32_t>(batch.tag_ids));
          return slot_loss(tape, logits, batch.tag_ids, batch.mask);
        },
        [](const std::string &name) { return name.rfind("intent/", 0) != 0; });
  }
  if (!o.corrupt_parameter.empty() && !acc.corrupted) {
    throw UsageError("gradcheck: no parameter named '" + o.corrupt_parameter + "'");
  }
  return report;
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json groups_json = nlohmann::json::array();
  for (const GradcheckGroup &g : groups) {
    groups_json.push_back({{"variant", g.variant},
                           {"loss", g.loss},
                           {"group", g.group},
                           {"checked", g.checked},
                           {"max_rel_error", g.max_rel_error},
                           {"worst_parameter", g.worst_parameter}});
  }
  return {{"passed", passed()},
          {"threshold", threshold},
          {"checked", checked},
          {"max_rel_error", max_rel_error},
          {"worst", worst},
          {"groups", groups_json}};
}

std::string GradcheckReport::to_text() const {
  std::ostringstream out;
  char line[256];
  for (const GradcheckGroup &g : groups) {
    std::snprintf(line, sizeof line, "%-16s %-3s %-24s n=%-6zu max_rel_error=%.3e  (%s)\n",
                  g.variant.c_str(), g.loss.c_str(), g.group.c_str(), g.checked, g.max_rel_error,
                  g.worst_parameter.c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "max relative error %.3e over %zu gradients (threshold %.0e): %s\n",
                max_rel_error, checked, threshold, passed() ? "PASS" : "FAIL");
  out << line;
  if (!passed()) out << "worst parameter: " << worst << "\n";
  return out.str();
}

}  // namespace bimodel
