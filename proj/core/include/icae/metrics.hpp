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
#include <string>
#include <vector>

#include "icae/image.hpp"

namespace icae::metrics {

inline constexpr double kPsnrCap = 100.0;
inline constexpr int kMsSsimMinSide = 176;

// Mean squared difference over all samples on the 0-255 scale.
double mse(const Image& a, const Image& b);
// 10 log10(255^2 / mse); identical images report kPsnrCap.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

// Five-scale MS-SSIM (11x11 Gaussian window, sigma 1.5, valid region,
// 2x2 average pooling between scales) averaged over R, G and B.
double ms_ssim(const Image& a, const Image& b);

// Single-channel MS-SSIM on a row-major plane of 0-255 samples.
double ms_ssim_plane(const std::vector<double>& a, const std::vector<double>& b,
                     int width, int height);

double bpp(std::uint64_t stream_bytes, std::int64_t height, std::int64_t width);

struct MetricsRow {
  std::string name;
  double bpp = 0;
  double psnr_db = 0;
  double ms_ssim = 0;
  double encode_s = 0;
  double decode_s = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  MetricsRow average;
};

MetricsReport aggregate(std::vector<MetricsRow> rows);

// Header `name,bpp,psnr_db,ms_ssim,encode_s,decode_s`, one line per row,
// then the `average` row.
std::string to_csv(const MetricsReport& report);
// Column-aligned text table; `footnote` is appended verbatim when non-empty.
std::string to_table(const MetricsReport& report, const std::string& footnote = "");

}  // namespace icae::metrics
