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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "icae/autodiff.hpp"
#include "icae/rng.hpp"

namespace icae::nn {

enum class Variant : std::uint8_t { kBaseline = 0, kDeepened = 1 };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

struct ArchConfig {
  Variant variant = Variant::kBaseline;
  int n_channels = 192;  // N
  int m_channels = 192;  // M
  bool deepen_hyper = false;

  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

enum class TransformKind { kAnalysis, kSynthesis, kHyperAnalysis, kHyperSynthesis };

std::string_view transform_name(TransformKind kind);

enum class LayerKind { kConv, kConvTranspose };
enum class Activation { kNone, kGdn, kIgdn, kRelu, kSoftplus };

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int kernel = 3;
  int stride = 1;
  int in_channels = 0;
  int out_channels = 0;
  Activation activation = Activation::kNone;

  // pad = kernel / 2 gives ceil(H / stride) outputs for odd kernels; the
  // transposed layers append stride - 1 rows so up-sampling is exactly
  // ×stride.
  int pad() const { return kernel / 2; }
  int output_padding() const {
    return kind == LayerKind::kConvTranspose ? stride - 1 : 0;
  }
  bool operator==(const LayerSpec&) const = default;
};

// Layer plan of one transform for the given architecture.
std::vector<LayerSpec> layer_plan(const ArchConfig& arch, TransformKind which);

struct Layer {
  LayerSpec spec;
  Var weight;     // conv: (out, in, k, k); transposed: (in, out, k, k)
  Var bias;       // (1, out, 1, 1)
  Var beta_raw;   // GDN/IGDN only: beta = beta_raw^2 + kBetaFloor
  Var gamma_raw;  // GDN/IGDN only: gamma = gamma_raw^2
};

inline constexpr Real kBetaFloor = 1e-6;

// Effective (positive) GDN parameters of a layer.
struct GdnParams {
  Var beta;
  Var gamma;
};
GdnParams gdn_params(const Layer& layer);

// Ordered parameterized layers realizing g_a, g_s, h_a or h_s.
class TransformStack {
 public:
  TransformStack() = default;
  TransformStack(TransformKind kind, std::vector<Layer> layers, bool abs_input);

  TransformKind kind() const { return kind_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  bool abs_input() const { return abs_input_; }

  // Product of the strides of the down-sampling layers (1 for up-sampling
  // stacks).
  int downsampling() const;
  int upsampling() const;

  Var forward(const Var& input) const;

  // Trainable tensors in declaration order.
  std::vector<Var> parameters() const;
  // Number of convolution weights and biases (GDN parameters excluded).
  std::int64_t conv_parameter_count() const;

 private:
  TransformKind kind_ = TransformKind::kAnalysis;
  std::vector<Layer> layers_;
  bool abs_input_ = false;
};

// Deterministic initialization from `seed`: fan-in variance-scaled uniform
// kernels, zero biases, beta = 1, gamma = 0.1 I, rounded to float precision.
TransformStack build_transform(const ArchConfig& arch, TransformKind which,
                               std::uint64_t seed);

}  // namespace icae::nn
