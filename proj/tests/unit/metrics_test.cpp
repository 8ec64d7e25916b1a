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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "icae/error.hpp"
#include "icae/metrics.hpp"
#include "synthetic.hpp"

namespace icae::metrics {
namespace {

using testing::synthetic_image;

Image random_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  return img;
}

// Direct two-dimensional evaluation of the multi-scale formula on one
// channel: explicit window sums, no separability, no shared helpers.
double oracle_ms_ssim_channel(const Image& a, const Image& b, int c) {
  const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  const double c1 = 6.5025;   // (0.01 * 255)^2
  const double c2 = 58.5225;  // (0.03 * 255)^2
  double win[11][11];
  long double wsum = 0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      win[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
      wsum += win[i][j];
    }
  }
  int w = a.width;
  int h = a.height;
  std::vector<long double> pa(static_cast<std::size_t>(w) * h);
  std::vector<long double> pb(pa.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      pa[y * w + x] = a.at(x, y, c);
      pb[y * w + x] = b.at(x, y, c);
    }
  }
  long double result = 1;
  for (int s = 0; s < 5; ++s) {
    long double ssim_sum = 0;
    long double cs_sum = 0;
    long double count = 0;
    for (int y = 0; y + 11 <= h; ++y) {
      for (int x = 0; x + 11 <= w; ++x) {
        long double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < 11; ++i) {
          for (int j = 0; j < 11; ++j) {
            const long double g = win[i][j] / wsum;
            const long double u = pa[(y + i) * w + x + j];
            const long double v = pb[(y + i) * w + x + j];
            ma += g * u;
            mb += g * v;
            saa += g * u * u;
            sbb += g * v * v;
            sab += g * u * v;
          }
        }
        const long double cs = (2 * (sab - ma * mb) + c2) / (saa - ma * ma + sbb - mb * mb + c2);
        const long double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        cs_sum += cs;
        ssim_sum += l * cs;
        count += 1;
      }
    }
    const long double term = s == 4 ? ssim_sum / count : cs_sum / count;
    result *= std::pow(std::max<long double>(0, term), weights[s]);
    if (s < 4) {
      const int nw = w / 2;
      const int nh = h / 2;
      std::vector<long double> da(static_cast<std::size_t>(nw) * nh);
      std::vector<long double> db(da.size());
      for (int y = 0; y < nh; ++y) {
        for (int x = 0; x < nw; ++x) {
          da[y * nw + x] = (pa[2 * y * w + 2 * x] + pa[2 * y * w + 2 * x + 1] +
                            pa[(2 * y + 1) * w + 2 * x] + pa[(2 * y + 1) * w + 2 * x + 1]) / 4;
          db[y * nw + x] = (pb[2 * y * w + 2 * x] + pb[2 * y * w + 2 * x + 1] +
                            pb[(2 * y + 1) * w + 2 * x] + pb[(2 * y + 1) * w + 2 * x + 1]) / 4;
        }
      }
      pa = std::move(da);
      pb = std::move(db);
      w = nw;
      h = nh;
    }
  }
  return static_cast<double>(result);
}

TEST(Mse, Examples) {
  Rng rng(1);
  const Image a = random_image(20, 10, rng);
  EXPECT_EQ(mse(a, a), 0.0);
  Image b = a;
  for (auto& v : b.rgb) v = v == 255 ? 254 : v + 1;
  EXPECT_EQ(mse(a, b), 1.0);
}

TEST(Mse, MatchesTwoPassOracle) {
  Rng rng(2);
  const Image a = random_image(123, 77, rng);
  const Image b = random_image(123, 77, rng);
  long double total = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const long double d = static_cast<long double>(a.rgb[i]) - b.rgb[i];
    total += d * d;
  }
  const long double oracle = total / a.rgb.size();
  EXPECT_NEAR(mse(a, b) / static_cast<double>(oracle), 1.0, 1e-10);
}

TEST(Mse, DimensionMismatchFails) {
  const Image a(10, 10);
  const Image b(10, 9);
  try {
    mse(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  }
  EXPECT_THROW(psnr(a, b), Error);
  EXPECT_THROW(ms_ssim(Image(200, 200), Image(200, 199)), Error);
}

TEST(Psnr, ClosedForms) {
  EXPECT_NEAR(psnr_from_mse(1.0), 20 * std::log10(255.0), 1e-12);
  EXPECT_NEAR(psnr_from_mse(1.0), 48.1308, 1e-3);
  EXPECT_EQ(psnr_from_mse(0.0), 100.0);
  EXPECT_NEAR(psnr_from_mse(255.0 * 255.0), 0.0, 1e-12);
  double prev = 1e9;
  for (double m = 0.5; m < 1e4; m *= 1.7) {
    EXPECT_LT(psnr_from_mse(m), prev);
    prev = psnr_from_mse(m);
  }
}

TEST(Psnr, SymmetricAndCapped) {
  Rng rng(3);
  const Image a = random_image(30, 30, rng);
  const Image b = random_image(30, 30, rng);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  EXPECT_EQ(psnr(a, a), 100.0);
}

TEST(MsSsim, SelfSimilarityIsOne) {
  Rng rng(4);
  for (int i = 0; i < 3; ++i) {
    const Image a = random_image(176 + static_cast<int>(rng.uniform_int(30)),
                                 176 + static_cast<int>(rng.uniform_int(30)), rng);
    EXPECT_NEAR(ms_ssim(a, a), 1.0, 1e-9);
  }
  EXPECT_NEAR(ms_ssim(Image(180, 190, 77), Image(180, 190, 77)), 1.0, 1e-12);
}

TEST(MsSsim, InvertedImageMatchesDirectOracle) {
  const Image a = synthetic_image(176, 180, 6);
  Image inv = a;
  for (auto& v : inv.rgb) v = static_cast<std::uint8_t>(255 - v);
  const double got = ms_ssim(a, inv);
  double oracle = 0;
  for (int c = 0; c < 3; ++c) oracle += oracle_ms_ssim_channel(a, inv, c);
  oracle /= 3;
  EXPECT_LT(got, 0.5);
  EXPECT_NEAR(got, oracle, 1e-9);
}

TEST(MsSsim, NoisyPairMatchesDirectOracleAndIsSymmetric) {
  const Image a = synthetic_image(190, 177, 8);
  Image b = a;
  Rng rng(9);
  for (auto& v : b.rgb) {
    v = static_cast<std::uint8_t>(std::clamp<int>(v + static_cast<int>(rng.uniform_int(31)) - 15, 0, 255));
  }
  double oracle = 0;
  for (int c = 0; c < 3; ++c) oracle += oracle_ms_ssim_channel(a, b, c);
  oracle /= 3;
  EXPECT_NEAR(ms_ssim(a, b), oracle, 1e-9);
  EXPECT_NEAR(ms_ssim(a, b), ms_ssim(b, a), 1e-12);
  EXPECT_GT(ms_ssim(a, b), 0.0);
  EXPECT_LT(ms_ssim(a, b), 1.0);
}

TEST(MsSsim, UndersizedInputNamesRequirement) {
  try {
    ms_ssim(Image(175, 300), Image(175, 300));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("176"), std::string::npos);
  }
}

TEST(Bpp, Examples) {
  EXPECT_NEAR(bpp(1000, 512, 768), 8000.0 / 393216.0, 1e-15);
  EXPECT_NEAR(bpp(1000, 512, 768), 0.020345, 1e-6);
  EXPECT_EQ(bpp(0, 10, 10), 0.0);
  EXPECT_THROW(bpp(10, 0, 10), Error);
}

TEST(Aggregate, SingleRow) {
  const MetricsRow r{"kodim01", 0.4, 31.5, 0.97, 0.2, 0.3};
  const MetricsReport rep = aggregate({r});
  EXPECT_EQ(rep.average.bpp, r.bpp);
  EXPECT_EQ(rep.average.psnr_db, r.psnr_db);
  EXPECT_EQ(rep.average.ms_ssim, r.ms_ssim);
  EXPECT_EQ(rep.average.name, "average");
  EXPECT_THROW(aggregate({}), Error);
}

TEST(Aggregate, TwentyFourRowsMatchHandSums) {
  std::vector<MetricsRow> rows;
  long double s[5] = {0, 0, 0, 0, 0};
  for (int i = 1; i <= 24; ++i) {
    MetricsRow r{"kodim" + std::to_string(i), 0.3 + 0.01 * i, 29 + 0.25 * i, 0.95 + 0.001 * i,
                 0.1 * i, 0.05 * i};
    s[0] += r.bpp;
    s[1] += r.psnr_db;
    s[2] += r.ms_ssim;
    s[3] += r.encode_s;
    s[4] += r.decode_s;
    rows.push_back(r);
  }
  const MetricsReport rep = aggregate(rows);
  ASSERT_EQ(rep.rows.size(), 24u);
  EXPECT_NEAR(rep.average.bpp, static_cast<double>(s[0] / 24), 1e-12);
  EXPECT_NEAR(rep.average.psnr_db, static_cast<double>(s[1] / 24), 1e-12);
  EXPECT_NEAR(rep.average.ms_ssim, static_cast<double>(s[2] / 24), 1e-12);
  EXPECT_NEAR(rep.average.encode_s, static_cast<double>(s[3] / 24), 1e-12);
  EXPECT_NEAR(rep.average.decode_s, static_cast<double>(s[4] / 24), 1e-12);

  std::istringstream csv(to_csv(rep));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "name,bpp,psnr_db,ms_ssim,encode_s,decode_s");
  int count = 0;
  std::string last;
  while (std::getline(csv, line)) {
    ++count;
    last = line;
  }
  EXPECT_EQ(count, 25);
  EXPECT_EQ(last.rfind("average,", 0), 0u);
  const std::string table = to_table(rep, "reference: 0.4242 bpp");
  EXPECT_NE(table.find("PSNR(dB)"), std::string::npos);
  EXPECT_LT(table.find("bpp"), table.find("PSNR"));
  EXPECT_LT(table.find("PSNR"), table.find("MS-SSIM"));
  EXPECT_NE(table.find("reference: 0.4242 bpp"), std::string::npos);
}

}  // namespace
}  // namespace icae::metrics
