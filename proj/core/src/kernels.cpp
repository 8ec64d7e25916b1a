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

#include "icae/kernels.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "icae/error.hpp"
#include "icae/parallel.hpp"

namespace icae::kernels {
namespace {

constexpr std::int64_t kTile = 256;

void check_kernel(const Shape& kernel, const char* what) {
  require(kernel.h == kernel.w && kernel.h > 0, ErrorKind::kShapeMismatch,
          std::string(what) + ": kernel must be square, got " + kernel.str());
}

// Output coordinates of one tile of flattened output positions.
struct TileCoords {
  std::vector<std::int64_t> oy;
  std::vector<std::int64_t> ox;

  void fill(std::int64_t p0, std::int64_t len, std::int64_t out_w) {
    oy.resize(static_cast<std::size_t>(len));
    ox.resize(static_cast<std::size_t>(len));
    for (std::int64_t t = 0; t < len; ++t) {
      oy[t] = (p0 + t) / out_w;
      ox[t] = (p0 + t) % out_w;
    }
  }
};

// Writes row `row` of the im2col matrix for channel plane `plane`.
void im2col_row(const Real* plane, std::int64_t in_h, std::int64_t in_w,
                int ky, int kx, ConvGeometry g, const TileCoords& tc,
                std::int64_t len, Real* row) {
  for (std::int64_t t = 0; t < len; ++t) {
    const std::int64_t iy = tc.oy[t] * g.stride - g.pad + ky;
    const std::int64_t ix = tc.ox[t] * g.stride - g.pad + kx;
    row[t] = (iy >= 0 && iy < in_h && ix >= 0 && ix < in_w)
                 ? plane[iy * in_w + ix]
                 : Real(0);
  }
}

double dot_fixed_order(const Real* a, const Real* b, std::int64_t len) {
  std::array<double, 8> lanes{};
  std::int64_t t = 0;
  for (; t + 8 <= len; t += 8) {
    for (int j = 0; j < 8; ++j) {
      lanes[j] += static_cast<double>(a[t + j]) * static_cast<double>(b[t + j]);
    }
  }
  double acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
               ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; t < len; ++t) acc += static_cast<double>(a[t]) * static_cast<double>(b[t]);
  return acc;
}

}  // namespace

std::int64_t conv_output_extent(std::int64_t input, int kernel, int stride,
                                int pad) {
  return (input + 2 * pad - kernel) / stride + 1;
}

std::int64_t conv_transpose_output_extent(std::int64_t input, int kernel,
                                          int stride, int pad,
                                          int output_padding) {
  return (input - 1) * stride - 2 * pad + kernel + output_padding;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel,
                      ConvGeometry g) {
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  check_kernel(ks, "conv2d");
  require(ks.c == is.c, ErrorKind::kShapeMismatch,
          "conv2d: kernel " + ks.str() + " does not match input " + is.str());
  require(g.stride > 0 && g.pad >= 0, ErrorKind::kInvalidArgument,
          "conv2d: invalid stride or padding");
  const int k = static_cast<int>(ks.h);
  const std::int64_t oh = conv_output_extent(is.h, k, g.stride, g.pad);
  const std::int64_t ow = conv_output_extent(is.w, k, g.stride, g.pad);
  require(oh > 0 && ow > 0, ErrorKind::kShapeMismatch,
          "conv2d: input " + is.str() + " too small for kernel " + ks.str());

  Tensor out(Shape{is.n, ks.n, oh, ow});
  const std::int64_t positions = oh * ow;
  const std::int64_t rows = ks.c * k * k;
  const std::int64_t tiles = (positions + kTile - 1) / kTile;
  const Real* weights = kernel.ptr();

  for (std::int64_t n = 0; n < is.n; ++n) {
    const Real* in_n = input.ptr() + n * is.c * is.plane();
    Real* out_n = out.ptr() + n * ks.n * positions;
    parallel_for(tiles, [&](std::int64_t tb, std::int64_t te) {
      std::vector<Real> cols(static_cast<std::size_t>(rows * kTile));
      std::vector<Real> acc(static_cast<std::size_t>(4 * kTile));
      TileCoords tc;
      for (std::int64_t tile = tb; tile < te; ++tile) {
        const std::int64_t p0 = tile * kTile;
        const std::int64_t len = std::min(kTile, positions - p0);
        tc.fill(p0, len, ow);
        for (std::int64_t ci = 0; ci < is.c; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const std::int64_t r = (ci * k + ky) * k + kx;
              im2col_row(in_n + ci * is.plane(), is.h, is.w, ky, kx, g, tc,
                         len, cols.data() + r * kTile);
            }
          }
        }
        for (std::int64_t co0 = 0; co0 < ks.n; co0 += 4) {
          const std::int64_t block = std::min<std::int64_t>(4, ks.n - co0);
          std::fill(acc.begin(), acc.end(), Real(0));
          Real* a0 = acc.data();
          Real* a1 = a0 + kTile;
          Real* a2 = a1 + kTile;
          Real* a3 = a2 + kTile;
          for (std::int64_t r = 0; r < rows; ++r) {
            const Real* col = cols.data() + r * kTile;
            const Real w0 = weights[(co0 + 0) * rows + r];
            const Real w1 = block > 1 ? weights[(co0 + 1) * rows + r] : Real(0);
            const Real w2 = block > 2 ? weights[(co0 + 2) * rows + r] : Real(0);
            const Real w3 = block > 3 ? weights[(co0 + 3) * rows + r] : Real(0);
            for (std::int64_t t = 0; t < len; ++t) {
              const Real c = col[t];
              a0[t] += w0 * c;
              a1[t] += w1 * c;
              a2[t] += w2 * c;
              a3[t] += w3 * c;
            }
          }
          for (std::int64_t j = 0; j < block; ++j) {
            std::copy_n(acc.data() + j * kTile, len,
                        out_n + (co0 + j) * positions + p0);
          }
        }
      }
    });
  }
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_output, const Tensor& kernel,
                             ConvGeometry g, const Shape& input_shape) {
  const Shape& gs = grad_output.shape();
  const Shape& ks = kernel.shape();
  check_kernel(ks, "conv2d_backward_input");
  const int k = static_cast<int>(ks.h);
  require(gs.c == ks.n && ks.c == input_shape.c && gs.n == input_shape.n,
          ErrorKind::kShapeMismatch,
          "conv2d_backward_input: gradient " + gs.str() + ", kernel " +
              ks.str() + ", input " + input_shape.str());
  require(conv_output_extent(input_shape.h, k, g.stride, g.pad) == gs.h &&
              conv_output_extent(input_shape.w, k, g.stride, g.pad) == gs.w,
          ErrorKind::kShapeMismatch,
          "conv2d_backward_input: input " + input_shape.str() +
              " does not map onto gradient " + gs.str());

  Tensor dx(input_shape);
  const std::int64_t positions = gs.h * gs.w;
  const std::int64_t rows = ks.c * k * k;
  const std::int64_t kk = static_cast<std::int64_t>(k) * k;
  const std::int64_t tiles = (positions + kTile - 1) / kTile;
  const Real* weights = kernel.ptr();

  for (std::int64_t n = 0; n < gs.n; ++n) {
    const Real* g_n = grad_output.ptr() + n * gs.c * positions;
    Real* dx_n = dx.ptr() + n * input_shape.c * input_shape.plane();
    parallel_for(input_shape.c, [&](std::int64_t cb, std::int64_t ce) {
      std::vector<Real> acc(static_cast<std::size_t>(kk * kTile));
      TileCoords tc;
      for (std::int64_t ci = cb; ci < ce; ++ci) {
        Real* plane = dx_n + ci * input_shape.plane();
        for (std::int64_t tile = 0; tile < tiles; ++tile) {
          const std::int64_t p0 = tile * kTile;
          const std::int64_t len = std::min(kTile, positions - p0);
          tc.fill(p0, len, gs.w);
          std::fill(acc.begin(), acc.end(), Real(0));
          for (std::int64_t co = 0; co < gs.c; ++co) {
            const Real* grow = g_n + co * positions + p0;
            const Real* wrow = weights + co * rows + ci * kk;
            for (std::int64_t r = 0; r < kk; ++r) {
              const Real w = wrow[r];
              Real* a = acc.data() + r * kTile;
              for (std::int64_t t = 0; t < len; ++t) a[t] += w * grow[t];
            }
          }
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const Real* a = acc.data() + (ky * k + kx) * kTile;
              for (std::int64_t t = 0; t < len; ++t) {
                const std::int64_t iy = tc.oy[t] * g.stride - g.pad + ky;
                const std::int64_t ix = tc.ox[t] * g.stride - g.pad + kx;
                if (iy >= 0 && iy < input_shape.h && ix >= 0 &&
                    ix < input_shape.w) {
                  plane[iy * input_shape.w + ix] += a[t];
                }
              }
            }
          }
        }
      }
    });
  }
  return dx;
}

Tensor conv2d_backward_kernel(const Tensor& input, const Tensor& grad_output,
                              ConvGeometry g, const Shape& kernel_shape) {
  const Shape& is = input.shape();
  const Shape& gs = grad_output.shape();
  check_kernel(kernel_shape, "conv2d_backward_kernel");
  const int k = static_cast<int>(kernel_shape.h);
  require(is.n == gs.n && kernel_shape.c == is.c && kernel_shape.n == gs.c,
          ErrorKind::kShapeMismatch,
          "conv2d_backward_kernel: input " + is.str() + ", gradient " +
              gs.str() + ", kernel " + kernel_shape.str());
  const std::int64_t positions = gs.h * gs.w;
  const std::int64_t rows = is.c * k * k;
  const std::int64_t tiles = (positions + kTile - 1) / kTile;
  std::vector<double> acc(static_cast<std::size_t>(gs.c * rows), 0.0);

  parallel_for(rows, [&](std::int64_t rb, std::int64_t re) {
    std::vector<Real> col(static_cast<std::size_t>(kTile));
    TileCoords tc;
    for (std::int64_t n = 0; n < is.n; ++n) {
      const Real* in_n = input.ptr() + n * is.c * is.plane();
      const Real* g_n = grad_output.ptr() + n * gs.c * positions;
      for (std::int64_t tile = 0; tile < tiles; ++tile) {
        const std::int64_t p0 = tile * kTile;
        const std::int64_t len = std::min(kTile, positions - p0);
        tc.fill(p0, len, gs.w);
        for (std::int64_t r = rb; r < re; ++r) {
          const std::int64_t ci = r / (k * k);
          const int ky = static_cast<int>((r / k) % k);
          const int kx = static_cast<int>(r % k);
          im2col_row(in_n + ci * is.plane(), is.h, is.w, ky, kx, g, tc, len,
                     col.data());
          for (std::int64_t co = 0; co < gs.c; ++co) {
            acc[co * rows + r] +=
                dot_fixed_order(g_n + co * positions + p0, col.data(), len);
          }
        }
      }
    }
  });

  Tensor dk(kernel_shape);
  for (std::int64_t i = 0; i < dk.numel(); ++i) {
    dk[i] = static_cast<Real>(acc[static_cast<std::size_t>(i)]);
  }
  return dk;
}

void add_channel_bias(Tensor& t, const Tensor& bias) {
  const Shape& s = t.shape();
  require(bias.numel() == s.c, ErrorKind::kShapeMismatch,
          "bias " + bias.shape().str() + " does not match " + s.str());
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      Real* p = t.ptr() + (n * s.c + c) * s.plane();
      const Real b = bias[c];
      for (std::int64_t i = 0; i < s.plane(); ++i) p[i] += b;
    }
  }
}

Tensor channel_sum(const Tensor& t) {
  const Shape& s = t.shape();
  Tensor out(Shape{1, s.c, 1, 1});
  for (std::int64_t c = 0; c < s.c; ++c) {
    double acc = 0.0;
    for (std::int64_t n = 0; n < s.n; ++n) {
      const Real* p = t.ptr() + (n * s.c + c) * s.plane();
      for (std::int64_t i = 0; i < s.plane(); ++i) acc += p[i];
    }
    out[c] = static_cast<Real>(acc);
  }
  return out;
}

}  // namespace icae::kernels
