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

#include <benchmark/benchmark.h>

#include <random>

#include "phydcm/dicom.hpp"
#include "phydcm/fixtures.hpp"
#include "phydcm/nnet.hpp"
#include "phydcm/preprocess.hpp"
#include "phydcm/volume.hpp"

using namespace phydcm;

namespace {

nnet::Tensor random_tensor(nnet::Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  nnet::Tensor t(std::move(shape));
  for (auto& v : t.data) v = u(rng);
  return t;
}

}  // namespace

static void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({c, hw, hw}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(nnet::conv2d(x, w, b, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c * c * hw * hw * 9));
}
BENCHMARK(BM_Conv2d)->Args({8, 56})->Args({16, 56})->Args({32, 14})->Unit(benchmark::kMicrosecond);

static void BM_Attention(benchmark::State& state) {
  const std::size_t d = nnet::kEmbedDim;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<nnet::Tensor> p;
  for (std::uint64_t i = 0; i < 4; ++i) {
    p.push_back(random_tensor({d, d}, 10 + i));
    p.push_back(random_tensor({d}, 20 + i));
  }
  const auto x = random_tensor({n, d}, 4);
  const nnet::AttentionWeights view{p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]};
  for (auto _ : state) benchmark::DoNotOptimize(nnet::attention(x, view));
}
BENCHMARK(BM_Attention)->Arg(49)->Arg(196)->Unit(benchmark::kMicrosecond);

static void BM_Forward(benchmark::State& state) {
  const auto weights = nnet::gen_fixture_weights(fixtures::kDefaultSeed);
  const nnet::Tensor x(nnet::Shape{1, nnet::kInputSize, nnet::kInputSize}, 0.5f);
  for (auto _ : state) benchmark::DoNotOptimize(nnet::forward(weights, x));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

static void BM_ParseDicom(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pixels = fixtures::synth_image(fixtures::kDefaultSeed, n, n, 0);
  dicom::SliceGeometry g;
  g.rows = n;
  g.cols = n;
  const auto bytes = dicom::serialize_dicom(dicom::make_fixture_dataset(g, pixels));
  for (auto _ : state) {
    const auto ds = dicom::parse_dicom(bytes);
    benchmark::DoNotOptimize(dicom::extract_pixels(ds));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(bytes.size()));
}
BENCHMARK(BM_ParseDicom)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);

static void BM_ResizeBilinear(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Image2D img(n, n);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 4095.0);
  for (auto& v : img.data) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(preprocess::resize_bilinear(img, nnet::kInputSize, nnet::kInputSize));
}
BENCHMARK(BM_ResizeBilinear)->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

static void BM_ExtractSlice(benchmark::State& state) {
  volume::Volume v;
  v.nx = v.ny = 256;
  v.nz = 64;
  v.voxels.assign(v.nx * v.ny * v.nz, 1.0);
  const auto plane = static_cast<volume::Plane>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(volume::extract_slice(v, plane, 10));
}
BENCHMARK(BM_ExtractSlice)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
