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

#include "icae/tensor.hpp"

// Raw convolution kernels on tensors, without graph recording. Kernel layout
// for conv2d is (out_channels, in_channels, k, k).
namespace icae::kernels {

struct ConvGeometry {
  int stride = 1;
  int pad = 0;
};

std::int64_t conv_output_extent(std::int64_t input, int kernel, int stride,
                                int pad);
std::int64_t conv_transpose_output_extent(std::int64_t input, int kernel,
                                          int stride, int pad,
                                          int output_padding);

// out[n, o] = sum_i kernel[o, i] (*) input[n, i]  (cross-correlation).
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel,
                      ConvGeometry geometry);

// Adjoint of conv2d_forward with respect to its input, producing a tensor
// of `input_shape`.
Tensor conv2d_backward_input(const Tensor& grad_output, const Tensor& kernel,
                             ConvGeometry geometry, const Shape& input_shape);

// Gradient of conv2d_forward with respect to the kernel.
Tensor conv2d_backward_kernel(const Tensor& input, const Tensor& grad_output,
                              ConvGeometry geometry, const Shape& kernel_shape);

// Adds bias[c] to every element of channel c.
void add_channel_bias(Tensor& t, const Tensor& bias);

// Per-channel sum over batch and space.
Tensor channel_sum(const Tensor& t);

}  // namespace icae::kernels
