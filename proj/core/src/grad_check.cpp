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

#include "icae/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icae/error.hpp"
#include "icae/rng.hpp"

namespace icae {
namespace {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

}  // namespace

GradCheckResult grad_check(const std::function<Var()>& f,
                           std::vector<Var> params,
                           const GradCheckOptions& options) {
  require(options.eps > 0, ErrorKind::kInvalidArgument,
          "grad_check: eps must be positive");
  FiniteCheckGuard finite;
  for (auto& p : params) p.zero_grad();
  {
    Var loss = f();
    if (loss.requires_grad()) backward(loss);
  }

  auto evaluate = [&]() -> double {
    NoGradGuard no_grad;
    return static_cast<double>(f().value().item());
  };

  Rng rng(options.seed);
  GradCheckResult result;
  for (auto& p : params) {
    const Tensor analytic =
        p.has_grad() ? p.grad() : Tensor(p.shape(), Real(0));
    Tensor& value = p.mutable_value();
    std::vector<std::int64_t> indices(static_cast<std::size_t>(value.numel()));
    std::iota(indices.begin(), indices.end(), 0);
    if (value.numel() > options.max_samples) {
      for (std::int64_t i = 0; i < options.max_samples; ++i) {
        const auto j = i + static_cast<std::int64_t>(rng.uniform_int(
                               static_cast<std::uint64_t>(value.numel() - i)));
        std::swap(indices[i], indices[j]);
      }
      indices.resize(static_cast<std::size_t>(options.max_samples));
    }
    for (const std::int64_t i : indices) {
      const Real original = value[i];
      auto central = [&](double eps) {
        const Real plus = static_cast<Real>(original + eps);
        const Real minus = static_cast<Real>(original - eps);
        value[i] = plus;
        const double f_plus = evaluate();
        value[i] = minus;
        const double f_minus = evaluate();
        value[i] = original;
        return (f_plus - f_minus) / (static_cast<double>(plus) - minus);
      };
      const double numeric = central(options.eps);
      if (options.kink_tolerance > 0) {
        const double half = central(options.eps / 2);
        if (relative_error(numeric, half) > options.kink_tolerance) {
          ++result.skipped;
          continue;
        }
      }
      const double err = relative_error(analytic[i], numeric);
      result.max_relative_error = std::max(result.max_relative_error, err);
      ++result.checked;
    }
    p.zero_grad();
  }
  return result;
}

}  // namespace icae
