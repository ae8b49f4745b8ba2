// Copyright 2026 The PhyDCM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "phydcm/error.hpp"
#include "phydcm/nnet.hpp"
#include "phydcm/random.hpp"
#include "test_support.hpp"

using namespace phydcm;
using namespace phydcm::nnet;
using testing::random_tensor;
using testing::to_vec;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoFailure;
}

const WeightTable& fixture_weights() {
  static const WeightTable w = gen_fixture_weights(0x5EED);
  return w;
}

Tensor half_input() { return Tensor(Shape{1, kInputSize, kInputSize}, 0.5f); }

double max_abs_diff(const std::vector<float>& a, const oracle::Vec& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

struct AttnParams {
  Tensor qw, qb, kw, kb, vw, vb, ow, ob;
  AttentionWeights view() const { return {qw, qb, kw, kb, vw, vb, ow, ob}; }
};

AttnParams random_attention(std::mt19937_64& rng, std::size_t d, float scale = 0.3f) {
  return {random_tensor(rng, {d, d}, -scale, scale), random_tensor(rng, {d}, -scale, scale),
          random_tensor(rng, {d, d}, -scale, scale), random_tensor(rng, {d}, -scale, scale),
          random_tensor(rng, {d, d}, -scale, scale), random_tensor(rng, {d}, -scale, scale),
          random_tensor(rng, {d, d}, -scale, scale), random_tensor(rng, {d}, -scale, scale)};
}

oracle::Attention oracle_attention(const Tensor& x, const AttnParams& p) {
  return oracle::attention(to_vec(x), x.dim(0), x.dim(1), to_vec(p.qw), to_vec(p.qb), to_vec(p.kw),
                           to_vec(p.kb), to_vec(p.vw), to_vec(p.vb), to_vec(p.ow), to_vec(p.ob));
}

}  // namespace

TEST_CASE("conv2d hand examples") {
  const Tensor ones({1, 3, 3}, 1.0f), kernel({1, 1, 3, 3}, 1.0f), zero_bias({1}, 0.0f);
  const Tensor out = conv2d(ones, kernel, zero_bias, 1);
  CHECK(out.shape == Shape{1, 3, 3});
  CHECK(out.data == std::vector<float>{4, 6, 4, 6, 9, 6, 4, 6, 4});

  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(rng, {3, 5, 7});
  const Tensor null_w({2, 3, 3, 3}, 0.0f), b({2}, std::vector<float>{1.5f, -2.0f});
  const Tensor c = conv2d(x, null_w, b, 1);
  for (std::size_t i = 0; i < 35; ++i) {
    CHECK(c.data[i] == 1.5f);
    CHECK(c.data[35 + i] == -2.0f);
  }

  Tensor delta({3, 3, 3, 3}, 0.0f);
  for (std::size_t o = 0; o < 3; ++o) delta.data[((o * 3 + o) * 3 + 1) * 3 + 1] = 1.0f;
  CHECK(conv2d(x, delta, Tensor({3}, 0.0f), 1) == x);
}

TEST_CASE("conv2d output sizes") {
  for (std::size_t h : {1u, 2u, 3u, 7u, 8u, 224u}) {
    const Tensor x({1, h, h + 1}, 1.0f);
    const Tensor w({1, 1, 3, 3}, 0.0f), b({1}, 0.0f);
    CHECK(conv2d(x, w, b, 1).shape == Shape{1, h, h + 1});
    CHECK(conv2d(x, w, b, 2).shape == Shape{1, (h - 1) / 2 + 1, (h + 1 - 1) / 2 + 1});
  }
}

TEST_CASE("conv2d agrees with the naive oracle on random cases") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> ch(1, 4), sp(1, 16);
  std::uniform_int_distribution<int> st(1, 2);
  int cases = 0;
  for (; cases < 150; ++cases) {
    const std::size_t c_in = ch(rng), c_out = ch(rng), h = sp(rng), w = sp(rng);
    const int stride = st(rng);
    const Tensor x = random_tensor(rng, {c_in, h, w}), k = random_tensor(rng, {c_out, c_in, 3, 3}),
                 b = random_tensor(rng, {c_out});
    const Tensor got = conv2d(x, k, b, stride);
    const auto want = oracle::conv3x3(to_vec(x), c_in, h, w, to_vec(k), to_vec(b), c_out, stride, 1);
    REQUIRE(got.shape == Shape{c_out, want.h, want.w});
    CHECK(max_abs_diff(got.data, want.out) <= 1e-5);
  }
  CHECK(cases >= 100);
}

TEST_CASE("conv2d shape errors") {
  const Tensor x({2, 4, 4}, 1.0f);
  CHECK(code_of([&] { conv2d(x, Tensor({1, 3, 3, 3}), Tensor({1}), 1); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { conv2d(x, Tensor({1, 2, 3, 3}), Tensor({2}), 1); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { conv2d(x, Tensor({1, 2, 2, 2}), Tensor({1}), 1); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { conv2d(Tensor({4, 4}), Tensor({1, 2, 3, 3}), Tensor({1}), 1); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { conv2d(x, Tensor({1, 2, 3, 3}), Tensor({1}), 3); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("linear and relu") {
  const Tensor x({2, 3}, std::vector<float>{1, 2, 3, -1, 0, 1});
  const Tensor w({3, 2}, std::vector<float>{1, 0, 0, 1, 1, 1});
  const Tensor b({2}, std::vector<float>{0.5f, -0.5f});
  const Tensor y = linear(x, w, b);
  CHECK(y.shape == Shape{2, 2});
  CHECK(y.data == std::vector<float>{4.5f, 4.5f, 0.5f, 0.5f});
  Tensor r({4}, std::vector<float>{-1, 0, 2, -0.0f});
  relu_inplace(r);
  CHECK(r.data == std::vector<float>{0, 0, 2, 0});
  CHECK(code_of([&] { linear(x, Tensor({2, 2}), b); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("layer_norm examples") {
  const Tensor g({4}, 1.0f), b({4}, 0.0f);
  const Tensor c = layer_norm(Tensor({1, 4}, 3.0f), g, b);
  CHECK(c.data == std::vector<float>(4, 0.0f));

  const Tensor beta({4}, std::vector<float>{1, 2, 3, 4});
  const Tensor x({1, 4}, std::vector<float>{1, 2, 3, 4});
  CHECK(layer_norm(x, Tensor({4}, 0.0f), beta).data == beta.data);

  const Tensor n = layer_norm(x, g, b);
  const float want[] = {-1.3416f, -0.4472f, 0.4472f, 1.3416f};
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(n.data[i] - want[i]) < 1e-3);

  std::mt19937_64 rng(4);
  const Tensor rx = random_tensor(rng, {5, 32}), rg = random_tensor(rng, {32}), rb = random_tensor(rng, {32});
  const auto ref = oracle::layer_norm(to_vec(rx), 5, 32, to_vec(rg), to_vec(rb), 1e-5);
  CHECK(max_abs_diff(layer_norm(rx, rg, rb).data, ref) <= 1e-5);
  CHECK(code_of([&] { layer_norm(rx, Tensor({31}), rb); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("gelu") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(std::fabs(gelu(1.0) - 0.8412) < 1e-3);
  for (double x = -8.0; x <= 8.0; x += 0.125) {
    CHECK(std::fabs(gelu(x)) <= std::fabs(x));
    CHECK(std::fabs(gelu(x) - oracle::gelu(x)) <= 1e-12);
  }
}

TEST_CASE("softmax") {
  const Tensor u = softmax(Tensor({4}, 0.0f));
  for (float v : u.data) CHECK(v == 0.25f);

  const Tensor l({4}, std::vector<float>{std::log(1.0f), std::log(2.0f), std::log(3.0f), std::log(4.0f)});
  const Tensor p = softmax(l);
  const double want[] = {0.1, 0.2, 0.3, 0.4};
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(p.data[i] - want[i]) <= 1e-6);

  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const Tensor x = random_tensor(rng, {7}, -20.0f, 20.0f);
    Tensor shifted = x;
    for (auto& v : shifted.data) v += 3.0f;
    const Tensor a = softmax(x), b = softmax(shifted);
    double sum = 0;
    for (std::size_t i = 0; i < 7; ++i) {
      sum += a.data[i];
      CHECK(a.data[i] > 0.0f);
      CHECK(a.data[i] <= 1.0f);
      CHECK(std::fabs(a.data[i] - b.data[i]) <= 1e-7);
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-6);
  }
  const Tensor big = softmax(Tensor({2}, std::vector<float>{1000.0f, -1000.0f}));
  CHECK(big.data[0] == 1.0f);
  CHECK(std::isfinite(big.data[1]));
}

TEST_CASE("attention with one token") {
  std::mt19937_64 rng(13);
  const auto p = random_attention(rng, 32, 1.0f);
  Tensor a;
  const Tensor x = random_tensor(rng, {1, 32});
  const Tensor out = attention(x, p.view(), &a);
  CHECK(a.shape == Shape{1, 1});
  CHECK(a.data[0] == 1.0f);
  CHECK(out.shape == Shape{1, 32});
}

TEST_CASE("attention over identical tokens") {
  std::mt19937_64 rng(14);
  const auto p = random_attention(rng, 32);
  const Tensor row = random_tensor(rng, {1, 32});
  Tensor x({5, 32});
  for (std::size_t i = 0; i < 5; ++i) std::copy(row.data.begin(), row.data.end(), x.data.begin() + i * 32);
  Tensor a;
  const Tensor out = attention(x, p.view(), &a);
  for (std::size_t i = 1; i < 5; ++i) {
    CHECK(std::equal(a.data.begin(), a.data.begin() + 5, a.data.begin() + i * 5));
    CHECK(std::equal(out.data.begin(), out.data.begin() + 32, out.data.begin() + i * 32));
  }
}

TEST_CASE("attention agrees with the three-loop oracle") {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<std::size_t> nd(1, 24);
  for (int t = 0; t < 120; ++t) {
    const std::size_t n = t == 0 ? 3 : nd(rng);
    const auto p = random_attention(rng, 32);
    const Tensor x = random_tensor(rng, {n, 32});
    Tensor a;
    const Tensor out = attention(x, p.view(), &a);
    const auto ref = oracle_attention(x, p);
    CHECK(max_abs_diff(out.data, ref.out) <= 1e-5);
    CHECK(max_abs_diff(a.data, ref.a) <= 1e-5);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < n; ++j) sum += a.data[i * n + j];
      CHECK(std::fabs(sum - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("attention shape errors") {
  std::mt19937_64 rng(16);
  const auto p = random_attention(rng, 32);
  CHECK(code_of([&] { attention(Tensor({3, 16}), p.view()); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { attention(Tensor({0, 32}), p.view()); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("model schema") {
  const auto& spec = model_params();
  REQUIRE(spec.size() == 16 + 2 * 16 + 2);
  const char* head[] = {"stem.w", "stem.b", "down1.w", "down1.b", "res1.c1.w", "res1.c1.b",
                        "res1.c2.w", "res1.c2.b", "res2.c1.w", "res2.c1.b", "res2.c2.w",
                        "res2.c2.b", "down2.w", "down2.b", "down3.w", "down3.b"};
  for (std::size_t i = 0; i < 16; ++i) CHECK(spec[i].name == head[i]);
  const char* block[] = {"ln1.g", "ln1.b", "q.w", "q.b", "k.w", "k.b", "v.w", "v.b",
                         "o.w", "o.b", "ln2.g", "ln2.b", "mlp.fc1.w", "mlp.fc1.b", "mlp.fc2.w", "mlp.fc2.b"};
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 16; ++i)
      CHECK(spec[16 + b * 16 + i].name == "tb" + std::to_string(b + 1) + "." + block[i]);
  CHECK(spec[48].name == "head.w");
  CHECK(spec[49].name == "head.b");

  CHECK(spec[0].shape == Shape{8, 1, 3, 3});
  CHECK(spec[2].shape == Shape{16, 8, 3, 3});
  CHECK(spec[4].shape == Shape{16, 16, 3, 3});
  CHECK(spec[12].shape == Shape{32, 16, 3, 3});
  CHECK(spec[14].shape == Shape{32, 32, 3, 3});
  CHECK(spec[16].shape == Shape{32});
  CHECK(spec[18].shape == Shape{32, 32});
  CHECK(spec[28].shape == Shape{32, 64});
  CHECK(spec[29].shape == Shape{64});
  CHECK(spec[30].shape == Shape{64, 32});
  CHECK(spec[48].shape == Shape{32, 4});
  CHECK(spec[49].shape == Shape{4});
}

TEST_CASE("fixture weights follow the SplitMix64 stream") {
  std::uint64_t state = 0x5EED;
  const std::uint64_t first = oracle::splitmix64(state);
  SplitMix64 rng(0x5EED);
  CHECK(rng.next() == first);

  // Published reference outputs for seed 1234567.
  SplitMix64 ref(1234567);
  CHECK(ref.next() == 6457827717110365317ull);
  CHECK(ref.next() == 3203168211198807973ull);
  CHECK(ref.next() == 9817491932198370423ull);
  CHECK(ref.next() == 4593380528125082431ull);
  CHECK(ref.next() == 16408922859458223821ull);

  const auto& w = fixture_weights();
  validate_weights(w);
  state = 0x5EED;
  for (const auto& [name, t] : w.entries()) {
    const bool ln = name.find(".ln") != std::string::npos;
    const bool gain = ln && name.ends_with(".g");
    for (float v : t.data) {
      const double u = static_cast<double>(oracle::splitmix64(state) >> 40) / 16777216.0;
      const float drawn = static_cast<float>(-0.05 + 0.1 * u);
      if (ln) {
        REQUIRE(v == (gain ? 1.0f : 0.0f));
      } else {
        REQUIRE(v == drawn);
        REQUIRE(v >= -0.05f);
        REQUIRE(v <= 0.05f);
      }
    }
  }
  CHECK(gen_fixture_weights(0x5EED) == w);
  CHECK(gen_fixture_weights(0x5EEE).at("stem.w") != w.at("stem.w"));
}

TEST_CASE("weight table lookup and validation") {
  WeightTable w = fixture_weights();
  CHECK(w.size() == model_params().size());
  CHECK(w.find("nope") == nullptr);
  CHECK(code_of([&] { (void)w.at("nope"); }) == ErrorCode::WeightsMissing);

  WeightTable partial;
  for (std::size_t i = 0; i + 1 < w.entries().size(); ++i) partial.add(w.entries()[i].first, w.entries()[i].second);
  CHECK(code_of([&] { validate_weights(partial); }) == ErrorCode::SchemaMismatch);
  CHECK(code_of([&] { forward(partial, half_input()); }) == ErrorCode::WeightsMissing);

  WeightTable reordered;
  reordered.add("stem.b", w.at("stem.b"));
  reordered.add("stem.w", w.at("stem.w"));
  CHECK(code_of([&] { validate_weights(reordered); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("forward shape audit and probability contract") {
  ForwardTrace trace;
  const Tensor p = forward(fixture_weights(), half_input(), &trace);
  const std::vector<std::pair<std::string, Shape>> want = {
      {"input", {1, 224, 224}}, {"stem", {8, 112, 112}}, {"down1", {16, 56, 56}},
      {"res1", {16, 56, 56}},   {"res2", {16, 56, 56}},  {"down2", {32, 28, 28}},
      {"down3", {32, 14, 14}},  {"tokens", {196, 32}},   {"tb1", {196, 32}},
      {"tb2", {196, 32}},       {"pool", {32}},          {"logits", {4}},
      {"probs", {4}}};
  CHECK(trace.shapes == want);
  REQUIRE(trace.attention.size() == 2);
  for (const auto& a : trace.attention) CHECK(a.shape == Shape{196, 196});
  CHECK(p.shape == Shape{4});
  double sum = 0;
  for (float v : p.data) {
    CHECK(v >= 0.0f);
    sum += v;
  }
  CHECK(std::fabs(sum - 1.0) <= 1e-6);
  CHECK(trace.logits.shape == Shape{4});
}

TEST_CASE("forward input errors") {
  const auto& w = fixture_weights();
  CHECK(code_of([&] { forward(w, Tensor({1, 224, 223})); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { forward(w, Tensor({2, 224, 224})); }) == ErrorCode::ShapeMismatch);
  preprocess::ImageTensor bad{1, 224, 224, std::vector<float>(10)};
  CHECK(code_of([&] { forward(w, bad); }) == ErrorCode::ShapeMismatch);
}

// Recorded from the first verified run and cross-checked against the
// double-precision straight-line oracle below.
constexpr float kGolden[4] = {0.247175246f, 0.253484637f, 0.246817902f, 0.2525222f};

TEST_CASE("golden forward vector") {
  const Tensor p = forward(fixture_weights(), half_input());
  const auto ref = oracle::forward(oracle::Vec(224 * 224, 0.5), testing::params_of(fixture_weights()));
  CHECK(max_abs_diff(p.data, ref) <= 1e-5);
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(p.data[i] - kGolden[i]) <= 1e-6);
}

TEST_CASE("forward matches the straight-line oracle on structured input") {
  Tensor x({1, 224, 224});
  for (std::size_t r = 0; r < 224; ++r)
    for (std::size_t c = 0; c < 224; ++c)
      x.data[r * 224 + c] = static_cast<float>(0.5 + 0.5 * std::sin(r * 0.07) * std::cos(c * 0.05));
  const auto w = gen_fixture_weights(77);
  const Tensor p = forward(w, x);
  const auto ref = oracle::forward(to_vec(x), testing::params_of(w));
  CHECK(max_abs_diff(p.data, ref) <= 1e-5);
}

TEST_CASE("forward is bit-identical across runs") {
  std::mt19937_64 rng(31);
  const Tensor x = random_tensor(rng, {1, 224, 224}, 0.0f, 1.0f);
  const Tensor a = forward(fixture_weights(), x), b = forward(fixture_weights(), x);
  CHECK(std::memcmp(a.data.data(), b.data.data(), 4 * sizeof(float)) == 0);
}
