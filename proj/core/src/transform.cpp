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

#include "icae/transform.hpp"

#include <algorithm>
#include <cmath>

#include "icae/error.hpp"
#include "icae/ops.hpp"

namespace icae::nn {
namespace {

Real round_to_float(double v) { return static_cast<Real>(static_cast<float>(v)); }

std::vector<LayerSpec> mirror(const std::vector<LayerSpec>& forward,
                              Activation hidden, Activation last) {
  std::vector<LayerSpec> out;
  for (auto it = forward.rbegin(); it != forward.rend(); ++it) {
    LayerSpec s = *it;
    s.kind = s.stride > 1 ? LayerKind::kConvTranspose : LayerKind::kConv;
    std::swap(s.in_channels, s.out_channels);
    s.activation = hidden;
    out.push_back(s);
  }
  out.back().activation = last;
  return out;
}

std::vector<LayerSpec> analysis_plan(const ArchConfig& a) {
  const int n = a.n_channels;
  const int m = a.m_channels;
  std::vector<LayerSpec> plan;
  if (a.variant == Variant::kBaseline) {
    plan = {{LayerKind::kConv, 5, 2, 3, n, Activation::kGdn},
            {LayerKind::kConv, 5, 2, n, n, Activation::kGdn},
            {LayerKind::kConv, 5, 2, n, n, Activation::kGdn},
            {LayerKind::kConv, 5, 2, n, m, Activation::kNone}};
  } else {
    int in = 3;
    for (int stage = 0; stage < 4; ++stage) {
      plan.push_back({LayerKind::kConv, 3, 1, in, n, Activation::kGdn});
      plan.push_back({LayerKind::kConv, 3, 2, n, stage == 3 ? m : n,
                      stage == 3 ? Activation::kNone : Activation::kGdn});
      in = n;
    }
  }
  return plan;
}

std::vector<LayerSpec> hyper_analysis_plan(const ArchConfig& a) {
  const int n = a.n_channels;
  const int m = a.m_channels;
  if (!a.deepen_hyper) {
    return {{LayerKind::kConv, 3, 1, m, n, Activation::kRelu},
            {LayerKind::kConv, 5, 2, n, n, Activation::kRelu},
            {LayerKind::kConv, 5, 2, n, n, Activation::kNone}};
  }
  return {{LayerKind::kConv, 3, 1, m, n, Activation::kRelu},
          {LayerKind::kConv, 3, 1, n, n, Activation::kRelu},
          {LayerKind::kConv, 3, 2, n, n, Activation::kRelu},
          {LayerKind::kConv, 3, 1, n, n, Activation::kRelu},
          {LayerKind::kConv, 3, 2, n, n, Activation::kNone}};
}

Var activate(const Var& x, const Layer& layer) {
  switch (layer.spec.activation) {
    case Activation::kNone:
      return x;
    case Activation::kRelu:
      return relu(x);
    case Activation::kSoftplus:
      return softplus(x);
    case Activation::kGdn: {
      const GdnParams p = gdn_params(layer);
      return gdn(x, p.beta, p.gamma);
    }
    case Activation::kIgdn: {
      const GdnParams p = gdn_params(layer);
      return igdn(x, p.beta, p.gamma);
    }
  }
  return x;
}

bool uses_gdn(Activation a) {
  return a == Activation::kGdn || a == Activation::kIgdn;
}

}  // namespace

Variant parse_variant(std::string_view name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "deepened") return Variant::kDeepened;
  fail(ErrorKind::kInvalidArgument,
       "unknown variant '" + std::string(name) + "' (expected baseline or deepened)");
}

std::string_view variant_name(Variant v) {
  return v == Variant::kBaseline ? "baseline" : "deepened";
}

void ArchConfig::validate() const {
  require(variant == Variant::kBaseline || variant == Variant::kDeepened,
          ErrorKind::kInvalidArgument,
          "unknown variant id " + std::to_string(static_cast<int>(variant)));
  require(n_channels > 0 && m_channels > 0, ErrorKind::kInvalidArgument,
          "channel counts must be positive");
}

std::string_view transform_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kAnalysis: return "g_a";
    case TransformKind::kSynthesis: return "g_s";
    case TransformKind::kHyperAnalysis: return "h_a";
    case TransformKind::kHyperSynthesis: return "h_s";
  }
  return "?";
}

std::vector<LayerSpec> layer_plan(const ArchConfig& arch, TransformKind which) {
  arch.validate();
  switch (which) {
    case TransformKind::kAnalysis:
      return analysis_plan(arch);
    case TransformKind::kSynthesis:
      return mirror(analysis_plan(arch), Activation::kIgdn, Activation::kNone);
    case TransformKind::kHyperAnalysis:
      return hyper_analysis_plan(arch);
    case TransformKind::kHyperSynthesis:
      return mirror(hyper_analysis_plan(arch), Activation::kRelu,
                    Activation::kSoftplus);
  }
  fail(ErrorKind::kInvalidArgument, "unknown transform kind");
}

GdnParams gdn_params(const Layer& layer) {
  require(layer.beta_raw.defined() && layer.gamma_raw.defined(),
          ErrorKind::kInvalidArgument, "layer has no GDN parameters");
  return {square_plus(layer.beta_raw, kBetaFloor),
          square_plus(layer.gamma_raw, 0)};
}

TransformStack::TransformStack(TransformKind kind, std::vector<Layer> layers,
                               bool abs_input)
    : kind_(kind), layers_(std::move(layers)), abs_input_(abs_input) {}

int TransformStack::downsampling() const {
  int f = 1;
  for (const auto& l : layers_) {
    if (l.spec.kind == LayerKind::kConv) f *= l.spec.stride;
  }
  return f;
}

int TransformStack::upsampling() const {
  int f = 1;
  for (const auto& l : layers_) {
    if (l.spec.kind == LayerKind::kConvTranspose) f *= l.spec.stride;
  }
  return f;
}

Var TransformStack::forward(const Var& input) const {
  require(!layers_.empty(), ErrorKind::kInvalidArgument, "empty transform");
  const Shape& s = input.shape();
  const std::string name(transform_name(kind_));
  require(s.c == layers_.front().spec.in_channels, ErrorKind::kShapeMismatch,
          name + ": input " + s.str() + " has " + std::to_string(s.c) +
              " channels, expected " +
              std::to_string(layers_.front().spec.in_channels));
  const int factor = downsampling();
  require(s.h % factor == 0 && s.w % factor == 0, ErrorKind::kShapeMismatch,
          name + ": input extents " + std::to_string(s.h) + "x" +
              std::to_string(s.w) + " are not divisible by " +
              std::to_string(factor) +
              "; pad the image to a multiple of 64 before coding");
  Var h = abs_input_ ? abs(input) : input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    ScopeGuard scope(name + "." + std::to_string(i));
    if (layer.spec.kind == LayerKind::kConv) {
      h = conv2d(h, layer.weight, layer.bias, layer.spec.stride, layer.spec.pad());
    } else {
      h = conv_transpose2d(h, layer.weight, layer.bias, layer.spec.stride,
                           layer.spec.pad(), layer.spec.output_padding());
    }
    h = activate(h, layer);
  }
  return h;
}

std::vector<Var> TransformStack::parameters() const {
  std::vector<Var> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
    if (l.beta_raw.defined()) out.push_back(l.beta_raw);
    if (l.gamma_raw.defined()) out.push_back(l.gamma_raw);
  }
  return out;
}

std::int64_t TransformStack::conv_parameter_count() const {
  std::int64_t count = 0;
  for (const auto& l : layers_) {
    count += l.weight.value().numel() + l.bias.value().numel();
  }
  return count;
}

TransformStack build_transform(const ArchConfig& arch, TransformKind which,
                               std::uint64_t seed) {
  const std::vector<LayerSpec> plan = layer_plan(arch, which);
  Rng rng(seed);
  std::vector<Layer> layers;
  for (const LayerSpec& spec : plan) {
    Layer layer;
    layer.spec = spec;
    const Shape ws = spec.kind == LayerKind::kConv
                         ? Shape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}
                         : Shape{spec.in_channels, spec.out_channels, spec.kernel, spec.kernel};
    const double fan_in =
        static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel;
    const double bound = std::sqrt(3.0 / fan_in);
    Tensor w(ws);
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      w[i] = round_to_float(bound * (2.0 * rng.uniform_double() - 1.0));
    }
    layer.weight = Var(std::move(w), true);
    layer.bias = Var(Tensor(Shape{1, spec.out_channels, 1, 1}, 0), true);
    if (uses_gdn(spec.activation)) {
      const int c = spec.out_channels;
      layer.beta_raw = Var(
          Tensor(Shape{1, c, 1, 1}, round_to_float(std::sqrt(1.0 - kBetaFloor))),
          true);
      // Off-diagonal entries start at 2^-18.
      Tensor g(Shape{1, 1, c, c}, round_to_float(0x1.0p-18));
      for (int i = 0; i < c; ++i) g[i * c + i] = round_to_float(std::sqrt(0.1));
      layer.gamma_raw = Var(std::move(g), true);
    }
    layers.push_back(std::move(layer));
  }
  return TransformStack(which, std::move(layers),
                        which == TransformKind::kHyperAnalysis);
}

}  // namespace icae::nn
