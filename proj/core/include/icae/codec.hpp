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
#include <span>
#include <vector>

#include "icae/codestream.hpp"
#include "icae/entropy_table.hpp"
#include "icae/image.hpp"
#include "icae/model.hpp"

namespace icae {

// Rounded latents in (1, C, h, w) layout; every value is an integer.
struct Latents {
  Tensor y_hat;
  Tensor z_hat;
};

struct EncodeOutput {
  std::vector<std::uint8_t> stream;
  Latents latents;
  // Cost of the coded symbols under the discretized tables.
  double table_bits = 0.0;
};

struct DecodeOutput {
  Image image;
  Latents latents;
};

// Frozen model plus its entropy tables, built once and reused for every
// image. Safe to share across threads.
class Codec {
 public:
  explicit Codec(nn::HyperpriorModel model);

  const nn::HyperpriorModel& model() const { return model_; }
  const entropy::EntropyTable& gaussian_table() const { return gaussian_; }
  const entropy::EntropyTable& factorized_table() const { return factorized_; }

  EncodeOutput encode(const Image& image) const;
  // Validates the container, model identity and checksum before decoding.
  DecodeOutput decode(std::span<const std::uint8_t> stream) const;

  // Pixels per side that padded inputs must be a multiple of.
  static constexpr int kPadMultiple = 64;

 private:
  std::vector<std::uint32_t> y_contexts(const Tensor& sigma) const;
  Tensor hyper_scales(const Tensor& z_hat) const;

  nn::HyperpriorModel model_;
  entropy::EntropyTable gaussian_;
  entropy::EntropyTable factorized_;
  std::vector<double> scales_;
};

}  // namespace icae
