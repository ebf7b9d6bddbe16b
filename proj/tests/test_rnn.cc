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

#include <random>

#include "doctest.h"
#include "errors.h"
#include "rnn.h"
#include "test_util.h"

using namespace bimodel;
using bimodel::testing::grad_of;
using bimodel::testing::max_rel_error;
using bimodel::testing::numeric_grad;
using bimodel::testing::random_tensor;

namespace {

using T = Tensor<double>;

void fill(const LstmParams<double> &p, double value) {
  for (const auto &g : p.gates) {
    for (const T &t : {g.input_weight, g.recurrent_weight, g.bias}) {
      for (double &v : t.mutable_values()) v = value;
    }
  }
}

NamedParams<double> params_of(const BlstmEncoder<double> &enc) {
  NamedParams<double> out;
  enc.collect("enc", out);
  return out;
}

// Re-draws every parameter in [-0.5, 0.5] so that gates are not all near 0.5.
template <typename Collect>
void randomize(const Collect &params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (const auto &[name, t] : params) {
    for (double &v : t.mutable_values()) v = dist(rng);
  }
}

std::vector<double> half(const T &states, std::size_t t, std::size_t b, std::size_t hidden,
                         bool forward) {
  const std::size_t batch = states.dim(1), width = states.dim(2);
  const double *row = states.values().data() + (t * batch + b) * width;
  const std::size_t off = forward ? 0 : hidden;
  return {row + off, row + off + hidden};
}

T reverse_steps(const T &x) {
  const std::size_t n = x.dim(0), stride = x.size() / n;
  std::vector<double> v(x.size());
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(x.values().data() + (n - 1 - t) * stride, stride, v.data() + t * stride);
  }
  return T(x.shape(), v);
}

LstmParams<double> clone_params(const LstmParams<double> &p, bool swap_input_halves) {
  LstmParams<double> out = p;
  for (std::size_t g = 0; g < 4; ++g) {
    out.gates[g].input_weight = p.gates[g].input_weight.clone();
    out.gates[g].recurrent_weight = p.gates[g].recurrent_weight.clone();
    out.gates[g].bias = p.gates[g].bias.clone();
    if (swap_input_halves) {
      const T &w = out.gates[g].input_weight;
      const std::size_t rows = w.dim(0), cols = w.dim(1), h = rows / 2;
      std::vector<double> v(w.values().begin(), w.values().end());
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = r < h ? r + h : r - h;
        std::copy_n(p.gates[g].input_weight.values().data() + src * cols, cols,
                    v.data() + r * cols);
      }
      std::copy(v.begin(), v.end(), w.mutable_values().begin());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("parameter initialization") {
  ParamInitializer init(3);
  auto p = LstmParams<double>::create(5, 4, init);
  for (Gate g : {Gate::kInput, Gate::kForget, Gate::kOutput, Gate::kCell}) {
    CHECK(p.gate(g).input_weight.shape() == Shape{5, 4});
    CHECK(p.gate(g).recurrent_weight.shape() == Shape{4, 4});
    CHECK(p.gate(g).bias.shape() == Shape{4});
    for (double v : p.gate(g).input_weight.values()) CHECK(std::abs(v) <= 0.1);
    for (double v : p.gate(g).bias.values()) CHECK(v == (g == Gate::kForget ? 1.0 : 0.0));
  }
  NamedParams<double> named;
  p.collect("x", named);
  CHECK(named.size() == 12);
  CHECK(named[3].first == "x/forget_gate/W");
}

TEST_CASE("lstm_step") {
  ParamInitializer init(1);
  auto p = LstmParams<double>::create(3, 2, init);
  std::mt19937_64 rng(1);
  T x = random_tensor({4, 3}, rng);

  SUBCASE("zero parameters give a zero hidden state") {
    fill(p, 0.0);
    Tape<double> tape;
    auto s = lstm_step(tape, p, x, LstmState<double>::zeros(4, 2));
    for (double v : s.h.values()) CHECK(v == 0.0);
  }

  SUBCASE("saturated forget and closed input gates keep the cell") {
    fill(p, 0.0);
    for (double &v : p.gate(Gate::kForget).bias.mutable_values()) v = 60.0;
    for (double &v : p.gate(Gate::kInput).bias.mutable_values()) v = -60.0;
    LstmState<double> prev{random_tensor({4, 2}, rng), random_tensor({4, 2}, rng)};
    Tape<double> tape;
    auto s = lstm_step(tape, p, x, prev);
    for (std::size_t i = 0; i < s.c.size(); ++i) {
      CHECK(s.c.values()[i] == doctest::Approx(prev.c.values()[i]).epsilon(1e-12));
    }
  }

  SUBCASE("shape mismatch") {
    Tape<double> tape;
    CHECK_THROWS_AS(lstm_step(tape, p, random_tensor({4, 2}, rng), LstmState<double>::zeros(4, 2)),
                    DimensionError);
    CHECK_THROWS_AS(lstm_step(tape, p, x, LstmState<double>::zeros(3, 2)), DimensionError);
  }

  SUBCASE("gradients match central differences") {
    NamedParams<double> named;
    p.collect("cell", named);
    randomize(named, 2);
    LstmState<double> prev{random_tensor({4, 2}, rng), random_tensor({4, 2}, rng)};
    T w = random_tensor({4, 2}, rng, -1, 1, false);
    auto loss = [&](Tape<double> &tape) {
      auto s = lstm_step(tape, p, x, prev);
      return ops::sum(tape, ops::add(tape, ops::mul(tape, s.h, w), ops::mul(tape, s.c, s.c)));
    };
    {
      Tape<double> tape;
      tape.backward(loss(tape));
    }
    auto f = [&] {
      Tape<double> tape(Tape<double>::Mode::kInference);
      return loss(tape).item();
    };
    for (const auto &[name, t] : named) {
      CAPTURE(name);
      CHECK(max_rel_error(grad_of(t), numeric_grad(t, f)) < 1e-4);
    }
    for (const T &t : {x, prev.h, prev.c}) CHECK(max_rel_error(grad_of(t), numeric_grad(t, f)) < 1e-4);
  }
}

TEST_CASE("blstm output shape and degenerate input") {
  ParamInitializer init(5);
  BlstmEncoder<double> enc({3, 0, 4, 2, 0}, init);
  std::mt19937_64 rng(5);
  for (std::size_t seq : {1u, 2u, 5u}) {
    for (std::size_t batch : {1u, 3u}) {
      Tape<double> tape(Tape<double>::Mode::kInference);
      T out = enc.forward(tape, random_tensor({seq, batch, 3}, rng));
      CHECK(out.shape() == Shape{seq, batch, 8});
    }
  }
  Tape<double> tape;
  CHECK_THROWS_AS(enc.run(tape, {}, {}, {}), ContractError);
  CHECK(enc.layers()[1].forward.input_dim == 8);
}

TEST_CASE("seq=1 output is one forward and one backward step on the token") {
  ParamInitializer init(8);
  BlstmEncoder<double> enc({3, 2, 4, 1, 0}, init);
  std::mt19937_64 rng(8);
  T x = random_tensor({1, 2, 3}, rng);
  T aux = random_tensor({1, 2, 2}, rng);
  Tape<double> tape;
  T out = enc.forward(tape, x, &aux);
  // Both directions see zero aux at a sequence of one step.
  T input = ops::concat(tape, {ops::select(tape, x, 0), T::zeros({2, 2})}, 1);
  auto f = lstm_step(tape, enc.layers()[0].forward, input, LstmState<double>::zeros(2, 4));
  auto b = lstm_step(tape, enc.layers()[0].backward, input, LstmState<double>::zeros(2, 4));
  T expected = ops::concat(tape, {f.h, b.h}, 1);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(out.values()[i] == doctest::Approx(expected.values()[i]).epsilon(1e-14));
  }
}

TEST_CASE("aux alignment: forward reads t-1, backward reads t+1") {
  ParamInitializer init(4);
  BlstmEncoder<double> enc({2, 2, 3, 1, 0}, init);
  std::mt19937_64 rng(4);
  T x = random_tensor({3, 1, 2}, rng);
  T aux = random_tensor({3, 1, 2}, rng);
  Tape<double> tape;
  T out = enc.forward(tape, x, &aux);
  auto in = [&](std::size_t t, int a) {
    T extra = a < 0 || a > 2 ? T::zeros({1, 2}) : ops::select(tape, aux, a);
    return ops::concat(tape, {ops::select(tape, x, t), extra}, 1);
  };
  auto f0 = lstm_step(tape, enc.layers()[0].forward, in(0, -1), LstmState<double>::zeros(1, 3));
  auto f1 = lstm_step(tape, enc.layers()[0].forward, in(1, 0), f0);
  auto b2 = lstm_step(tape, enc.layers()[0].backward, in(2, 3), LstmState<double>::zeros(1, 3));
  auto b1 = lstm_step(tape, enc.layers()[0].backward, in(1, 2), b2);
  const auto fwd1 = half(out, 1, 0, 3, true), bwd1 = half(out, 1, 0, 3, false);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(fwd1[i] == doctest::Approx(f1.h.values()[i]).epsilon(1e-14));
    CHECK(bwd1[i] == doctest::Approx(b1.h.values()[i]).epsilon(1e-14));
  }
}

TEST_CASE("reversing the sequence swaps the two halves") {
  ParamInitializer init(21);
  const std::size_t H = 3;
  BlstmEncoder<double> enc({2, 2, H, 2, 0}, init);
  randomize(params_of(enc), 21);
  ParamInitializer init2(99);
  BlstmEncoder<double> mirror({2, 2, H, 2, 0}, init2);
  for (std::size_t l = 0; l < 2; ++l) {
    mirror.layers()[l].forward = clone_params(enc.layers()[l].backward, l > 0);
    mirror.layers()[l].backward = clone_params(enc.layers()[l].forward, l > 0);
  }
  std::mt19937_64 rng(21);
  T x = random_tensor({5, 2, 2}, rng), aux = random_tensor({5, 2, 2}, rng);
  T rx = reverse_steps(x), raux = reverse_steps(aux);
  Tape<double> tape(Tape<double>::Mode::kInference);
  T out = enc.forward(tape, x, &aux);
  T rout = mirror.forward(tape, rx, &raux);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t b = 0; b < 2; ++b) {
      const auto f = half(out, t, b, H, true), bw = half(out, t, b, H, false);
      const auto rf = half(rout, 4 - t, b, H, true), rb = half(rout, 4 - t, b, H, false);
      for (std::size_t i = 0; i < H; ++i) {
        CHECK(rf[i] == doctest::Approx(bw[i]).epsilon(1e-12));
        CHECK(rb[i] == doctest::Approx(f[i]).epsilon(1e-12));
      }
    }
  }
}

// Only a single layer is causal per half: upper layers read both lower directions.
TEST_CASE("temporal causality of each half") {
  ParamInitializer init(6);
  const std::size_t H = 4, n = 5;
  BlstmEncoder<double> enc({3, 0, H, 1, 0}, init);
  std::mt19937_64 rng(6);
  T x = random_tensor({n, 1, 3}, rng);
  Tape<double> tape(Tape<double>::Mode::kInference);
  T base = enc.forward(tape, x);
  for (std::size_t k = 0; k < n; ++k) {
    T xp = x.clone();
    for (std::size_t d = 0; d < 3; ++d) xp.mutable_values()[k * 3 + d] += 0.5;
    T pert = enc.forward(tape, xp);
    for (std::size_t t = 0; t < n; ++t) {
      CAPTURE(k);
      CAPTURE(t);
      const bool fwd_same = half(base, t, 0, H, true) == half(pert, t, 0, H, true);
      const bool bwd_same = half(base, t, 0, H, false) == half(pert, t, 0, H, false);
      CHECK(fwd_same == (t < k));
      CHECK(bwd_same == (t > k));
    }
  }
}

TEST_CASE("padding does not leak into real steps") {
  ParamInitializer init(12);
  const std::size_t H = 3;
  BlstmEncoder<double> enc({2, 2, H, 2, 0}, init);
  randomize(params_of(enc), 12);
  std::mt19937_64 rng(12);
  // Row 1 has two real steps out of four; its padded inputs are garbage.
  std::vector<T> xs, as;
  for (int t = 0; t < 4; ++t) {
    xs.push_back(random_tensor({2, 2}, rng, -2, 2, false));
    as.push_back(random_tensor({2, 2}, rng, -2, 2, false));
  }
  for (int t = 2; t < 4; ++t) {
    for (std::size_t d = 0; d < 2; ++d) as[t].mutable_values()[2 + d] = 0.0;
  }
  const std::vector<std::size_t> lengths{4, 2};
  Tape<double> tape(Tape<double>::Mode::kInference);
  EncoderOutput<double> batched = enc.run(tape, xs, as, lengths);

  std::vector<T> xs1, as1;
  for (int t = 0; t < 2; ++t) {
    xs1.push_back(T({1, 2}, {xs[t].values()[2], xs[t].values()[3]}));
    as1.push_back(T({1, 2}, {as[t].values()[2], as[t].values()[3]}));
  }
  EncoderOutput<double> alone = enc.run(tape, xs1, as1, {});
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < 2 * H; ++i) {
      const double got = batched.states[t].values()[2 * H + i];
      CHECK(got == doctest::Approx(t < 2 ? alone.states[t].values()[i] : 0.0).epsilon(1e-12));
    }
  }
  for (std::size_t i = 0; i < H; ++i) {
    CHECK(batched.final_forward.values()[H + i] ==
          doctest::Approx(alone.final_forward.values()[i]).epsilon(1e-12));
    CHECK(batched.final_backward.values()[H + i] ==
          doctest::Approx(alone.final_backward.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("blstm gradients through 3 steps and 2 layers") {
  ParamInitializer init(31);
  BlstmEncoder<double> enc({2, 2, 3, 2, 2}, init);
  NamedParams<double> named = params_of(enc);
  randomize(named, 31);
  std::mt19937_64 rng(31);
  std::vector<T> xs, as;
  for (int t = 0; t < 3; ++t) {
    xs.push_back(random_tensor({2, 2}, rng));
    as.push_back(random_tensor({2, 2}, rng));
  }
  T feed_table = random_tensor({3, 2}, rng);
  T w = random_tensor({2, 6}, rng, -1, 1, false);
  const std::vector<std::size_t> lengths{3, 2};
  auto loss = [&](Tape<double> &tape) {
    StepFeed<double> feed = [&](std::size_t t, const T *) {
      const std::vector<std::int32_t> ids{static_cast<std::int32_t>(t), 0};
      return ops::embedding_lookup<double>(tape, feed_table, ids);
    };
    EncoderOutput<double> out = enc.run(tape, xs, as, lengths, &feed);
    T total = ops::sum(tape, ops::mul(tape, out.states[0], w));
    for (std::size_t t = 1; t < 3; ++t) {
      total = ops::add(tape, total, ops::sum(tape, ops::mul(tape, out.states[t], w)));
    }
    return total;
  };
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  auto f = [&] {
    Tape<double> tape(Tape<double>::Mode::kInference);
    return loss(tape).item();
  };
  for (const auto &[name, t] : named) {
    CAPTURE(name);
    CHECK(max_rel_error(grad_of(t), numeric_grad(t, f)) < 1e-4);
  }
  CHECK(max_rel_error(grad_of(feed_table), numeric_grad(feed_table, f)) < 1e-4);
  for (const T &t : xs) CHECK(max_rel_error(grad_of(t), numeric_grad(t, f)) < 1e-4);
}

TEST_CASE("decoder") {
  ParamInitializer init(17);
  LstmDecoder<double> dec({5, 3, 2}, init);
  std::mt19937_64 rng(17);
  T x = random_tensor({2, 5}, rng);

  SUBCASE("zero weights give a zero output") {
    LstmDecoder<double> zero({5, 3, 2}, init);
    NamedParams<double> named;
    zero.collect("d", named);
    for (const auto &[name, t] : named) {
      for (double &v : t.mutable_values()) v = 0.0;
    }
    Tape<double> tape;
    auto s = zero.step(tape, x, zero.initial_state(2));
    for (double v : LstmDecoder<double>::output(s).values()) CHECK(v == 0.0);
  }

  SUBCASE("bitwise deterministic") {
    auto run = [&] {
      Tape<double> tape(Tape<double>::Mode::kInference);
      auto s = dec.initial_state(2);
      std::vector<double> trace;
      for (int t = 0; t < 4; ++t) {
        s = dec.step(tape, x, s);
        for (double v : LstmDecoder<double>::output(s).values()) trace.push_back(v);
      }
      return trace;
    };
    CHECK(run() == run());
  }

  SUBCASE("shape mismatch") {
    Tape<double> tape;
    CHECK_THROWS_AS(dec.step(tape, random_tensor({2, 4}, rng), dec.initial_state(2)),
                    DimensionError);
    LstmDecoder<double>::State short_state(1, LstmState<double>::zeros(2, 3));
    CHECK_THROWS_AS(dec.step(tape, x, short_state), DimensionError);
  }

  SUBCASE("gradients match central differences") {
    NamedParams<double> named;
    dec.collect("d", named);
    randomize(named, 17);
    T w = random_tensor({2, 3}, rng, -1, 1, false);
    auto loss = [&](Tape<double> &tape) {
      auto s = dec.initial_state(2);
      T total = T::scalar(0.0);
      for (int t = 0; t < 3; ++t) {
        s = dec.step(tape, x, s);
        total = ops::add(tape, total, ops::sum(tape, ops::mul(tape, LstmDecoder<double>::output(s), w)));
      }
      return total;
    };
    {
      Tape<double> tape;
      tape.backward(loss(tape));
    }
    auto f = [&] {
      Tape<double> tape(Tape<double>::Mode::kInference);
      return loss(tape).item();
    };
    for (const auto &[name, t] : named) {
      CAPTURE(name);
      CHECK(max_rel_error(grad_of(t), numeric_grad(t, f)) < 1e-4);
    }
    CHECK(max_rel_error(grad_of(x), numeric_grad(x, f)) < 1e-4);
  }
}
