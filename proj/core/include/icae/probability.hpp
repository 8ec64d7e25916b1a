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

#include "icae/model.hpp"

namespace icae::entropy {

// Phi((k + 1/2) / sigma) - Phi((k - 1/2) / sigma) for a zero-mean Gaussian;
// sigma below scale_floor is clamped to the floor.
double gaussian_bin_prob(std::int64_t k, double sigma,
                         double scale_floor = nn::GaussianConditional{}.scale_floor);

// Probability of the unit bin centred on k under a logistic density.
double logistic_bin_prob(std::int64_t k, double location, double scale);

// Sum of -log2(p); every p must lie in (0, 1].
double estimate_bits(std::span<const double> probs);
double estimate_bits(const Tensor& probs);

// Scale contexts: 64 log-spaced values from scale_floor (0.11) to 256.
inline constexpr int kScaleLevels = 64;
inline constexpr double kScaleMax = 256.0;
std::vector<double> scale_table(double scale_floor = nn::GaussianConditional{}.scale_floor);

// Index of the smallest table scale >= sigma (the last index when sigma
// exceeds the table).
std::uint32_t scale_index(double sigma, std::span<const double> table);

}  // namespace icae::entropy
