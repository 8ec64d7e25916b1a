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

#include "icae/probability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "icae/error.hpp"

namespace icae::entropy {
namespace {

double upper_tail(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace

double gaussian_bin_prob(std::int64_t k, double sigma, double scale_floor) {
  const double s = std::max(sigma, scale_floor);
  const double a = std::abs(static_cast<double>(k));
  return upper_tail((a - 0.5) / s) - upper_tail((a + 0.5) / s);
}

double logistic_bin_prob(std::int64_t k, double location, double scale) {
  const double d = static_cast<double>(k) - location;
  if (d > 0) return sigmoid(-(d - 0.5) / scale) - sigmoid(-(d + 0.5) / scale);
  return sigmoid((d + 0.5) / scale) - sigmoid((d - 0.5) / scale);
}

double estimate_bits(std::span<const double> probs) {
  double acc = 0.0;
  for (const double p : probs) {
    require(p > 0 && p <= 1, ErrorKind::kInvalidArgument,
            "estimate_bits: probability " + std::to_string(p) +
                " outside (0, 1]");
    acc -= std::log2(p);
  }
  return acc;
}

double estimate_bits(const Tensor& probs) {
  return estimate_bits(std::span<const double>(probs.data()));
}

std::vector<double> scale_table(double scale_floor) {
  std::vector<double> t(kScaleLevels);
  const double lo = std::log(scale_floor);
  const double hi = std::log(kScaleMax);
  for (int i = 0; i < kScaleLevels; ++i) {
    t[i] = std::exp(lo + (hi - lo) * i / (kScaleLevels - 1));
  }
  t.front() = scale_floor;
  t.back() = kScaleMax;
  return t;
}

std::uint32_t scale_index(double sigma, std::span<const double> table) {
  const auto it = std::lower_bound(table.begin(), table.end(), sigma);
  if (it == table.end()) return static_cast<std::uint32_t>(table.size() - 1);
  return static_cast<std::uint32_t>(it - table.begin());
}

}  // namespace icae::entropy
