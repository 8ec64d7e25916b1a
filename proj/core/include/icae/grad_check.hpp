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
#include <functional>
#include <vector>

#include "icae/autodiff.hpp"

namespace icae {

struct GradCheckOptions {
  double eps = 1e-3;
  // Elements checked per parameter; smaller tensors are checked exhaustively.
  std::int64_t max_samples = 48;
  std::uint64_t seed = 0;
  // When positive, each element is also differenced at eps/2. If the two
  // estimates disagree by more than this relative amount the perturbation
  // straddles a kink (relu, abs, clamp); the element is counted in
  // `skipped` instead of contributing to the error.
  double kink_tolerance = 0.0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::int64_t checked = 0;
  std::int64_t skipped = 0;
};

// Compares reverse-mode gradients of the scalar `f` against central finite
// differences. The error of one element is
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// f is evaluated with finiteness checks on, so a non-finite intermediate
// fails with the name of the offending op and scope.
GradCheckResult grad_check(const std::function<Var()>& f,
                           std::vector<Var> params,
                           const GradCheckOptions& options = {});

}  // namespace icae
