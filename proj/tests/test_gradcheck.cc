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

#include <set>

#include "doctest.h"
#include "errors.h"
#include "gradcheck.h"

using namespace bimodel;

TEST_CASE("presets") {
  CHECK(GradcheckOptions::preset("small").hidden_dim == 8);
  CHECK(GradcheckOptions::preset("tiny").hidden_dim == 3);
  CHECK_THROWS_AS(GradcheckOptions::preset("huge"), UsageError);
}

TEST_CASE("tiny gradcheck passes and covers every group") {
  const GradcheckReport r = run_gradcheck(GradcheckOptions::preset("tiny"));
  CHECK(r.passed());
  CHECK(r.max_rel_error < 1e-3);
  CHECK(r.checked > 0);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const GradcheckGroup &g : r.groups) {
    seen.insert(g.variant + " " + g.loss + " " + g.group);
    total += g.checked;
    CHECK(g.max_rel_error <= r.max_rel_error);
  }
  CHECK(total == r.checked);
  for (const char *v : {"with_decoder", "without_decoder"}) {
    const std::string p = v;
    CHECK(seen.count(p + " L1 intent/encoder"));
    CHECK(seen.count(p + " L1 embedding/words"));
    CHECK(seen.count(p + " L2 slot/encoder"));
    CHECK(seen.count(p + " L2 slot/embedding"));
    CHECK(seen.count(p + " L2 embedding/words"));
    CHECK_FALSE(seen.count(p + " L1 slot/encoder"));
    CHECK_FALSE(seen.count(p + " L2 intent/encoder"));
  }
  CHECK(seen.count("with_decoder L1 intent/decoder"));
  CHECK(seen.count("with_decoder L2 slot/decoder"));
  CHECK_FALSE(seen.count("without_decoder L2 slot/decoder"));

  const auto j = r.to_json();
  CHECK(j.at("passed").get<bool>());
  CHECK(j.at("checked").get<std::size_t>() == r.checked);
  CHECK(r.to_text().find("PASS") != std::string::npos);
}

TEST_CASE("a corrupted adjoint is caught") {
  GradcheckOptions o = GradcheckOptions::preset("tiny");
  o.corrupt_parameter = "slot/output/W";
  const GradcheckReport r = run_gradcheck(o);
  CHECK_FALSE(r.passed());
  CHECK(r.max_rel_error > 0.1);
  CHECK(r.worst.find("slot/output/W") != std::string::npos);
  CHECK(r.to_text().find("FAIL") != std::string::npos);

  o.corrupt_parameter = "no/such/param";
  CHECK_THROWS_AS(run_gradcheck(o), UsageError);
}
