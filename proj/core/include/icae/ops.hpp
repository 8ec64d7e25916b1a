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

#include "icae/autodiff.hpp"
#include "icae/rng.hpp"

// Differentiable operations used by the transforms and the rate-distortion
// loss. All of them record onto the graph when gradients are enabled.
namespace icae {

// Cross-correlation; kernel (C_out, C_in, k, k), bias (1, C_out, 1, 1).
// Output extents floor((H + 2 pad - k) / stride) + 1.
Var conv2d(const Var& input, const Var& kernel, const Var& bias, int stride,
           int pad);

// Exact adjoint of conv2d's linear map; kernel (C_in, C_out, k, k).
// Output extents (H - 1) stride - 2 pad + k + output_padding, where the
// extra rows and columns are appended at the bottom and right.
Var conv_transpose2d(const Var& input, const Var& kernel, const Var& bias,
                     int stride, int pad, int output_padding = 0);

// y_c = x_c / sqrt(beta_c + sum_k gamma_{c,k} x_k^2). beta is (1, C, 1, 1)
// and gamma is (1, 1, C, C) holding gamma[c, k] at (c, k).
Var gdn(const Var& x, const Var& beta, const Var& gamma);
// y_c = x_c * sqrt(beta_c + sum_k gamma_{c,k} x_k^2).
Var igdn(const Var& x, const Var& beta, const Var& gamma);

Var relu(const Var& x);
Var abs(const Var& x);
Var softplus(const Var& x);

// raw^2 + floor, the positivity reparameterization for GDN parameters.
Var square_plus(const Var& raw, Real floor);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var square(const Var& a);

// Scalar reductions (accumulated in double).
Var sum(const Var& a);
Var mean(const Var& a);
Var mean_squared_error(const Var& a, const Var& b);

// Training-time quantization proxy: adds independent uniform noise in
// [-0.5, 0.5); the gradient is the identity.
Var add_uniform_noise(const Var& x, Rng& rng);

// Zero-mean Gaussian bin probability Phi((y+1/2)/s) - Phi((y-1/2)/s) with
// s = max(sigma, scale_floor), bounded below by prob_floor.
Var gaussian_likelihood(const Var& y, const Var& sigma, double scale_floor,
                        double prob_floor = 1e-9);

// Per-channel logistic bin probability with location loc[c] (1, C, 1, 1) and
// scale exp(log_scale[c]), bounded below by prob_floor.
Var logistic_likelihood(const Var& z, const Var& loc, const Var& log_scale,
                        double prob_floor = 1e-9);

// Sum of -log2(p) over all elements; every probability must lie in (0, 1].
Var bits(const Var& probs);

}  // namespace icae
