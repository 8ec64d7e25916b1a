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

#include "icae/codec.hpp"

#include <cmath>
#include <string>

#include "icae/error.hpp"
#include "icae/probability.hpp"
#include "icae/quantize.hpp"
#include "icae/range_coder.hpp"

namespace icae {
namespace {

constexpr std::int64_t kMaxStreamPixels = std::int64_t{1} << 28;

std::vector<std::int32_t> to_symbols(const Tensor& t) {
  std::vector<std::int32_t> out(static_cast<std::size_t>(t.numel()));
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    const double v = t[i];
    require(v >= entropy::kRawMin && v <= entropy::kRawMax, ErrorKind::kNonFinite,
            "latent value outside the codable range");
    out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(v);
  }
  return out;
}

Tensor from_symbols(const std::vector<std::int32_t>& s, Shape shape) {
  Tensor t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = s[static_cast<std::size_t>(i)];
  return t;
}

std::vector<std::uint32_t> channel_contexts(const Shape& s) {
  std::vector<std::uint32_t> ctx(static_cast<std::size_t>(s.numel()));
  for (std::int64_t i = 0; i < s.numel(); ++i) {
    ctx[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>((i / s.plane()) % s.c);
  }
  return ctx;
}

std::int64_t ceil_to(std::int64_t v, std::int64_t m) { return (v + m - 1) / m * m; }

}  // namespace

Codec::Codec(nn::HyperpriorModel model)
    : model_(std::move(model)),
      gaussian_(entropy::build_gaussian_table(model_.conditional())),
      factorized_(entropy::build_factorized_table(model_)),
      scales_(entropy::scale_table(model_.conditional().scale_floor)) {}

Tensor Codec::hyper_scales(const Tensor& z_hat) const {
  return model_.hyper_synthesis().forward(Var(z_hat)).value();
}

std::vector<std::uint32_t> Codec::y_contexts(const Tensor& sigma) const {
  std::vector<std::uint32_t> ctx(static_cast<std::size_t>(sigma.numel()));
  for (std::int64_t i = 0; i < sigma.numel(); ++i) {
    ctx[static_cast<std::size_t>(i)] = entropy::scale_index(sigma[i], scales_);
  }
  return ctx;
}

EncodeOutput Codec::encode(const Image& image) const {
  require(image.width > 0 && image.height > 0, ErrorKind::kInvalidArgument,
          "cannot encode an empty image");
  NoGradGuard no_grad;
  const Image padded = pad_edge(image, kPadMultiple);
  const Var x(image_to_tensor(padded, true));
  const Var y = model_.analysis().forward(x);
  const Var z = model_.hyper_analysis().forward(y);
  const Var z_hat = entropy::quantize(z, entropy::QuantizeMode::kRound);
  const Var y_hat = entropy::quantize(y, entropy::QuantizeMode::kRound);
  const Tensor sigma = hyper_scales(z_hat.value());

  const auto z_sym = to_symbols(z_hat.value());
  const auto z_ctx = channel_contexts(z_hat.shape());
  const auto y_sym = to_symbols(y_hat.value());
  const auto y_ctx = y_contexts(sigma);

  const nn::ArchConfig& arch = model_.arch();
  entropy::StreamParts parts;
  parts.header.variant = static_cast<std::uint8_t>(arch.variant);
  parts.header.n_channels = static_cast<std::uint16_t>(arch.n_channels);
  parts.header.m_channels = static_cast<std::uint16_t>(arch.m_channels);
  parts.header.height = static_cast<std::uint32_t>(image.height);
  parts.header.width = static_cast<std::uint32_t>(image.width);
  parts.z_bytes = entropy::range_encode(z_sym, z_ctx, factorized_);
  const auto y_coded = entropy::range_encode(y_sym, y_ctx, gaussian_);
  parts.y_bytes = entropy::seal_y_segment(parts.header, parts.z_bytes, y_coded);

  EncodeOutput out;
  out.stream = entropy::pack_stream(parts);
  out.latents = {y_hat.value(), z_hat.value()};
  out.table_bits = entropy::table_bits(z_sym, z_ctx, factorized_) +
                   entropy::table_bits(y_sym, y_ctx, gaussian_);
  return out;
}

DecodeOutput Codec::decode(std::span<const std::uint8_t> stream) const {
  const entropy::StreamParts parts = entropy::unpack_stream(stream);
  const entropy::StreamHeader& h = parts.header;
  const nn::ArchConfig& arch = model_.arch();
  require(h.variant == static_cast<std::uint8_t>(arch.variant) &&
              h.n_channels == arch.n_channels && h.m_channels == arch.m_channels,
          ErrorKind::kModelMismatch,
          "stream was produced by a different model (variant " + std::to_string(h.variant) +
              ", N=" + std::to_string(h.n_channels) + ", M=" + std::to_string(h.m_channels) +
              ")");
  const auto y_coded = entropy::open_y_segment(parts);
  const std::int64_t hp = ceil_to(h.height, kPadMultiple);
  const std::int64_t wp = ceil_to(h.width, kPadMultiple);
  require(hp * wp <= kMaxStreamPixels, ErrorKind::kCorruptStream,
          "header dimensions exceed the supported image size");

  NoGradGuard no_grad;
  const Shape z_shape{1, arch.n_channels, hp / 64, wp / 64};
  const Shape y_shape{1, arch.m_channels, hp / 16, wp / 16};
  const auto z_ctx = channel_contexts(z_shape);
  const auto z_sym = entropy::range_decode(parts.z_bytes, z_ctx, factorized_,
                                           z_ctx.size());
  Tensor z_hat = from_symbols(z_sym, z_shape);
  const Tensor sigma = hyper_scales(z_hat);
  require(sigma.shape() == y_shape, ErrorKind::kShapeMismatch,
          "hyper synthesis produced " + sigma.shape().str() + ", expected " + y_shape.str());
  const auto y_ctx = y_contexts(sigma);
  const auto y_sym = entropy::range_decode(y_coded, y_ctx, gaussian_, y_ctx.size());
  Tensor y_hat = from_symbols(y_sym, y_shape);

  const Var x_hat = model_.synthesis().forward(Var(y_hat));
  Image full = tensor_to_image(x_hat.value(), true);
  DecodeOutput out;
  out.image = crop(full, static_cast<int>(h.width), static_cast<int>(h.height));
  require(out.image.rgb.size() == out.image.pixel_count() * 3, ErrorKind::kCorruptStream,
          "reconstruction is incomplete");
  out.latents = {std::move(y_hat), std::move(z_hat)};
  return out;
}

}  // namespace icae
