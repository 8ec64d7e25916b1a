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
#include <string>
#include <vector>

#include "icae/autodiff.hpp"
#include "icae/rng.hpp"
#include "icae/transform.hpp"

namespace icae::nn {

inline constexpr double kDefaultLambda = 0.01;

// Zero-mean Gaussian conditional model for the main latents.
struct GaussianConditional {
  double scale_floor = 0.11;
  double tail_mass = 1e-9;
};

// Differentiable outputs of one training-mode forward pass.
struct TrainForward {
  Var x_hat;
  Var y_probs;
  Var z_probs;
};

// The four transforms plus the factorized prior over z.
class HyperpriorModel {
 public:
  HyperpriorModel() = default;

  static HyperpriorModel create(const ArchConfig& arch, double lambda,
                                std::uint64_t seed);

  const ArchConfig& arch() const { return arch_; }
  double lambda() const { return lambda_; }
  const GaussianConditional& conditional() const { return conditional_; }

  const TransformStack& analysis() const { return g_a_; }
  const TransformStack& synthesis() const { return g_s_; }
  const TransformStack& hyper_analysis() const { return h_a_; }
  const TransformStack& hyper_synthesis() const { return h_s_; }
  // Per-channel logistic location and log-scale, shape (1, N, 1, 1).
  const Var& prior_location() const { return prior_loc_; }
  const Var& prior_log_scale() const { return prior_log_scale_; }

  // Noise-quantized forward pass used for training.
  TrainForward forward_train(const Var& x, Rng& rng) const;

  // Every trainable tensor in checkpoint declaration order:
  // g_a, g_s, h_a, h_s, then the prior location and log-scale.
  std::vector<Var> parameters() const;
  // Names aligned with parameters(), e.g. "g_a.0.weight" or "prior.loc".
  std::vector<std::string> parameter_names() const;

 private:
  ArchConfig arch_;
  double lambda_ = kDefaultLambda;
  GaussianConditional conditional_;
  TransformStack g_a_;
  TransformStack g_s_;
  TransformStack h_a_;
  TransformStack h_s_;
  Var prior_loc_;
  Var prior_log_scale_;
};

// Checkpoint layout (little-endian): "ICAEMODL", version u8, variant u8,
// N u32, M u32, deepen_hyper u8, lambda f64, then for every parameter in
// declaration order an element count u32 followed by float32 values, and a
// trailing FNV-1a 64-bit checksum of all preceding bytes.
std::vector<std::uint8_t> serialize_checkpoint(const HyperpriorModel& model);
HyperpriorModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const HyperpriorModel& model,
                     const std::filesystem::path& path);
HyperpriorModel load_checkpoint(const std::filesystem::path& path);

}  // namespace icae::nn
