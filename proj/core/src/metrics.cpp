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

#include "icae/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "icae/error.hpp"

namespace icae::metrics {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);
constexpr std::array<double, 5> kWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double total = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    total += g[i];
  }
  for (auto& x : g) x /= total;
  return g;
}

// Separable valid-region filtering.
Plane blur(const Plane& p) {
  static const auto g = gaussian_window();
  const int ow = p.width - kWindow + 1;
  const int oh = p.height - kWindow + 1;
  Plane rows{ow, p.height, std::vector<double>(static_cast<std::size_t>(ow) * p.height)};
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * p.at(x + k, y);
      rows.v[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * rows.at(x, y + k);
      out.v[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.width, a.height, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

// Mean SSIM and mean contrast-structure term at one scale.
std::pair<double, double> ssim_terms(const Plane& a, const Plane& b) {
  const Plane mu_a = blur(a);
  const Plane mu_b = blur(b);
  const Plane aa = blur(product(a, a));
  const Plane bb = blur(product(b, b));
  const Plane ab = blur(product(a, b));
  double ssim = 0;
  double cs = 0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i];
    const double mb = mu_b.v[i];
    const double va = aa.v[i] - ma * ma;
    const double vb = bb.v[i] - mb * mb;
    const double cov = ab.v[i] - ma * mb;
    const double c = (2 * cov + kC2) / (va + vb + kC2);
    const double l = (2 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
    cs += c;
    ssim += l * c;
  }
  const double n = static_cast<double>(mu_a.v.size());
  return {ssim / n, cs / n};
}

Plane downsample(const Plane& p) {
  const int w = p.width / 2;
  const int h = p.height / 2;
  Plane out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.v[static_cast<std::size_t>(y) * w + x] =
          0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) +
                  p.at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

void check_same_size(const Image& a, const Image& b) {
  require(a.width == b.width && a.height == b.height && a.rgb.size() == b.rgb.size(),
          ErrorKind::kShapeMismatch,
          "image dimensions differ: " + std::to_string(a.width) + "x" +
              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
              std::to_string(b.height));
  require(!a.rgb.empty(), ErrorKind::kInvalidArgument, "empty images");
}

std::string fmt(double v, int precision) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_same_size(a, b);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const int d = static_cast<int>(a.rgb[i]) - static_cast<int>(b.rgb[i]);
    total += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(total) / static_cast<double>(a.rgb.size());
}

double psnr_from_mse(double m) {
  require(m >= 0, ErrorKind::kInvalidArgument, "negative MSE");
  if (m == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / m));
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

double ms_ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int width,
                     int height) {
  require(std::min(width, height) >= kMsSsimMinSide, ErrorKind::kInvalidArgument,
          "MS-SSIM needs images of at least " + std::to_string(kMsSsimMinSide) + "x" +
              std::to_string(kMsSsimMinSide) + " pixels, got " + std::to_string(width) +
              "x" + std::to_string(height));
  require(a.size() == b.size() && a.size() == static_cast<std::size_t>(width) * height,
          ErrorKind::kShapeMismatch, "MS-SSIM plane sizes differ");
  Plane pa{width, height, a};
  Plane pb{width, height, b};
  double result = 1.0;
  for (std::size_t s = 0; s < kWeights.size(); ++s) {
    const auto [ssim, cs] = ssim_terms(pa, pb);
    const double term = s + 1 == kWeights.size() ? ssim : cs;
    result *= std::pow(std::max(0.0, term), kWeights[s]);
    if (s + 1 < kWeights.size()) {
      pa = downsample(pa);
      pb = downsample(pb);
    }
  }
  return result;
}

double ms_ssim(const Image& a, const Image& b) {
  check_same_size(a, b);
  double total = 0;
  const std::size_t n = a.pixel_count();
  for (int c = 0; c < 3; ++c) {
    std::vector<double> pa(n);
    std::vector<double> pb(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a.rgb[i * 3 + c];
      pb[i] = b.rgb[i * 3 + c];
    }
    total += ms_ssim_plane(pa, pb, a.width, a.height);
  }
  return total / 3.0;
}

double bpp(std::uint64_t stream_bytes, std::int64_t height, std::int64_t width) {
  require(height > 0 && width > 0, ErrorKind::kInvalidArgument,
          "bpp needs a positive image area");
  return 8.0 * static_cast<double>(stream_bytes) / static_cast<double>(height * width);
}

MetricsReport aggregate(std::vector<MetricsRow> rows) {
  require(!rows.empty(), ErrorKind::kInvalidArgument, "cannot aggregate an empty report");
  MetricsReport report;
  report.average.name = "average";
  for (const auto& r : rows) {
    report.average.bpp += r.bpp;
    report.average.psnr_db += r.psnr_db;
    report.average.ms_ssim += r.ms_ssim;
    report.average.encode_s += r.encode_s;
    report.average.decode_s += r.decode_s;
  }
  const double n = static_cast<double>(rows.size());
  report.average.bpp /= n;
  report.average.psnr_db /= n;
  report.average.ms_ssim /= n;
  report.average.encode_s /= n;
  report.average.decode_s /= n;
  report.rows = std::move(rows);
  return report;
}

std::string to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "name,bpp,psnr_db,ms_ssim,encode_s,decode_s\n";
  auto line = [&](const MetricsRow& r) {
    out << r.name << ',' << fmt(r.bpp, 6) << ',' << fmt(r.psnr_db, 4) << ','
        << fmt(r.ms_ssim, 6) << ',' << fmt(r.encode_s, 6) << ',' << fmt(r.decode_s, 6)
        << '\n';
  };
  for (const auto& r : report.rows) line(r);
  line(report.average);
  return out.str();
}

std::string to_table(const MetricsReport& report, const std::string& footnote) {
  std::size_t name_w = 7;
  for (const auto& r : report.rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %10s %10s %10s %10s %10s\n", static_cast<int>(name_w),
                "name", "bpp", "PSNR(dB)", "MS-SSIM", "enc(s)", "dec(s)");
  out << buf;
  auto line = [&](const MetricsRow& r) {
    std::snprintf(buf, sizeof buf, "%-*s %10s %10s %10s %10s %10s\n", static_cast<int>(name_w),
                  r.name.c_str(), fmt(r.bpp, 4).c_str(), fmt(r.psnr_db, 2).c_str(),
                  fmt(r.ms_ssim, 4).c_str(), fmt(r.encode_s, 3).c_str(),
                  fmt(r.decode_s, 3).c_str());
    out << buf;
  };
  for (const auto& r : report.rows) line(r);
  out << std::string(name_w + 55, '-') << '\n';
  line(report.average);
  if (!footnote.empty()) out << footnote << (footnote.back() == '\n' ? "" : "\n");
  return out.str();
}

}  // namespace icae::metrics
