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
#include <filesystem>
#include <span>
#include <vector>

#include "icae/tensor.hpp"

namespace icae {

// 8-bit interleaved RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool operator==(const Image&) const = default;
};

// PNG (8-bit gray, palette or RGB) and binary/ASCII PPM with maxval 255.
// Inputs with an alpha channel or transparency raise kAlphaUnsupported;
// 16-bit inputs raise kUnsupportedFormat.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& image);
std::vector<std::uint8_t> encode_ppm(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

// Extends the image to the next multiples of `multiple` by replicating the
// last row and column.
Image pad_edge(const Image& image, int multiple);
Image crop(const Image& image, int width, int height);

// Piecewise sRGB transfer function on [0, 1].
double srgb_to_linear(double v);
double linear_to_srgb(double v);

// (1, 3, H, W) tensor in [0, 1], optionally linearized.
Tensor image_to_tensor(const Image& image, bool linearize);
// Inverse of image_to_tensor with clipping to [0, 1] and rounding to 8 bits.
Image tensor_to_image(const Tensor& t, bool delinearize);

}  // namespace icae
