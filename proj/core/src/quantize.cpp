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

#include "icae/quantize.hpp"

#include <cmath>

#include "icae/error.hpp"
#include "icae/ops.hpp"

namespace icae::entropy {
namespace {
thread_local QuantizeCounts t_counts;
}  // namespace

Tensor round_half_away(const Tensor& t) {
  Tensor out(t.shape());
  for (std::int64_t i = 0; i < t.numel(); ++i) out[i] = std::round(t[i]);
  return out;
}

Var quantize(const Var& v, QuantizeMode mode, Rng* rng) {
  require(v.value().all_finite(), ErrorKind::kNonFinite,
          "quantize: non-finite input");
  if (mode == QuantizeMode::kNoise) {
    require(rng != nullptr, ErrorKind::kInvalidArgument,
            "quantize: noise mode needs a generator");
    ++t_counts.noise;
    return add_uniform_noise(v, *rng);
  }
  ++t_counts.round;
  return Var(round_half_away(v.value()));
}

QuantizeCounts quantize_counts() { return t_counts; }

}  // namespace icae::entropy
