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

#include "icae/autodiff.hpp"
#include "icae/rng.hpp"

namespace icae::entropy {

enum class QuantizeMode { kNoise, kRound };

// kNoise: additive uniform noise in [-0.5, 0.5), gradient passes through
// (requires rng). kRound: nearest integer with ties away from zero; the
// result is detached from the graph.
Var quantize(const Var& v, QuantizeMode mode, Rng* rng = nullptr);

// Nearest integer, ties away from zero.
Tensor round_half_away(const Tensor& t);

// Per-thread tally of quantizer calls by mode, used to assert that training
// never rounds and inference never adds noise.
struct QuantizeCounts {
  std::int64_t noise = 0;
  std::int64_t round = 0;
};
QuantizeCounts quantize_counts();

}  // namespace icae::entropy
