// Copyright (c) the ICAE Project Authors
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

#include <cstdint>
#include <vector>

#include "icae/codec.hpp"
#include "icae/entropy_table.hpp"
#include "icae/kernels.hpp"
#include "icae/range_coder.hpp"
#include "icae/rng.hpp"

namespace {

using namespace icae;

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform_double() * 2 - 1;
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  Rng rng(1);
  const Tensor x = random_tensor(Shape{1, channels, 64, 64}, rng);
  const Tensor w = random_tensor(Shape{channels, channels, k, k}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::conv2d_forward(x, w, {2, k / 2}));
  }
  state.SetItemsProcessed(state.iterations() * 32 * 32 * channels * channels * k * k);
}
BENCHMARK(BM_Conv2dForward)->Args({32, 5})->Args({32, 3})->Args({64, 5});

struct CoderFixture {
  entropy::EntropyTable table = entropy::build_gaussian_table(nn::GaussianConditional{});
  std::vector<std::int32_t> values;
  std::vector<std::uint32_t> contexts;

  explicit CoderFixture(std::size_t n) {
    Rng rng(7);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ctx = static_cast<std::uint32_t>(rng.uniform_int(table.size()));
      contexts.push_back(ctx);
      values.push_back(static_cast<std::int32_t>(rng.uniform_int(9)) - 4);
    }
  }
};

void BM_RangeEncode(benchmark::State& state) {
  const CoderFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(entropy::range_encode(f.values, f.contexts, f.table));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeEncode)->Arg(1 << 16);

void BM_RangeDecode(benchmark::State& state) {
  const CoderFixture f(static_cast<std::size_t>(state.range(0)));
  const auto bytes = entropy::range_encode(f.values, f.contexts, f.table);
  for (auto _ : state) {
    benchmark::DoNotOptimize(entropy::range_decode(bytes, f.contexts, f.table, f.values.size()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeDecode)->Arg(1 << 16);

Image noise_image(int w, int h) {
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  Rng rng(3);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  return img;
}

const Codec& small_codec(nn::Variant variant) {
  static const Codec baseline = [] {
    nn::ArchConfig a;
    a.n_channels = a.m_channels = 32;
    return Codec(nn::HyperpriorModel::create(a, 0.01, 1));
  }();
  static const Codec deepened = [] {
    nn::ArchConfig a;
    a.variant = nn::Variant::kDeepened;
    a.n_channels = a.m_channels = 32;
    return Codec(nn::HyperpriorModel::create(a, 0.01, 1));
  }();
  return variant == nn::Variant::kBaseline ? baseline : deepened;
}

void BM_CodecEncode(benchmark::State& state) {
  const Codec& codec = small_codec(static_cast<nn::Variant>(state.range(0)));
  const Image img = noise_image(256, 256);
  for (auto _ : state) benchmark::DoNotOptimize(codec.encode(img));
}
BENCHMARK(BM_CodecEncode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CodecDecode(benchmark::State& state) {
  const Codec& codec = small_codec(static_cast<nn::Variant>(state.range(0)));
  const auto stream = codec.encode(noise_image(256, 256)).stream;
  for (auto _ : state) benchmark::DoNotOptimize(codec.decode(stream));
}
BENCHMARK(BM_CodecDecode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
