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

#include "icae/entropy_table.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "icae/byte_io.hpp"
#include "icae/error.hpp"
#include "icae/probability.hpp"

namespace icae::entropy {
namespace {

double upper_tail(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

double logistic_cdf(double x, double location, double scale) {
  const double a = (x - location) / scale;
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

// Standard normal quantile of 1 - tail by bisection on the upper tail.
double normal_quantile_upper(double tail) {
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (upper_tail(mid) > tail) lo = mid; else hi = mid;
  }
  return hi;
}

}  // namespace

SymbolContext quantize_pmf(std::int32_t offset, std::span<const double> masses) {
  require(masses.size() >= 2, ErrorKind::kInvalidArgument,
          "quantize_pmf: need at least one symbol plus escape");
  require(masses.size() <= kCdfTotal / 2, ErrorKind::kInvalidArgument,
          "quantize_pmf: alphabet too large for the CDF precision");
  std::vector<std::int64_t> freq(masses.size());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    const double m = std::isfinite(masses[i]) ? std::max(0.0, masses[i]) : 0.0;
    freq[i] = std::max<std::int64_t>(1, std::llround(m * kCdfTotal));
    total += freq[i];
  }
  // Rounding surplus or deficit goes to the largest bins, lowest index first.
  while (total != kCdfTotal) {
    const auto it = std::max_element(freq.begin(), freq.end());
    if (total > kCdfTotal) {
      const std::int64_t d = std::min<std::int64_t>(total - kCdfTotal, *it - 1);
      *it -= d;
      total -= d;
    } else {
      *it += kCdfTotal - total;
      total = kCdfTotal;
    }
  }
  SymbolContext ctx;
  ctx.offset = offset;
  ctx.cdf.resize(masses.size() + 1);
  ctx.cdf[0] = 0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    ctx.cdf[i + 1] = ctx.cdf[i] + static_cast<std::uint32_t>(freq[i]);
  }
  return ctx;
}

EntropyTable::EntropyTable(std::vector<SymbolContext> contexts)
    : contexts_(std::move(contexts)) {}

const SymbolContext& EntropyTable::context(std::uint32_t id) const {
  require(id < contexts_.size(), ErrorKind::kInvalidArgument,
          "context id " + std::to_string(id) + " out of range (table has " +
              std::to_string(contexts_.size()) + ")");
  return contexts_[id];
}

std::vector<std::uint8_t> EntropyTable::serialize() const {
  ByteWriter w;
  w.be(kCdfPrecision, 1);
  w.be(contexts_.size(), 4);
  for (const auto& c : contexts_) {
    w.be(static_cast<std::uint32_t>(c.offset), 4);
    w.be(c.cdf.size(), 4);
    for (const auto v : c.cdf) w.be(v, 4);
  }
  return w.take();
}

double EntropyTable::cost_bits(std::int32_t value, std::uint32_t id) const {
  const SymbolContext& c = context(id);
  const std::int64_t idx = static_cast<std::int64_t>(value) - c.offset;
  const bool in_alphabet = idx >= 0 && idx < c.alphabet_size();
  const std::uint32_t symbol =
      in_alphabet ? static_cast<std::uint32_t>(idx) : c.escape_symbol();
  double bits = kCdfPrecision - std::log2(static_cast<double>(c.frequency(symbol)));
  if (!in_alphabet) bits += 16.0;
  return bits;
}

EntropyTable build_gaussian_table(const nn::GaussianConditional& model) {
  require(model.scale_floor > 0 && model.tail_mass > 0 && model.tail_mass < 0.5,
          ErrorKind::kInvalidArgument, "invalid Gaussian conditional");
  const double z = normal_quantile_upper(model.tail_mass);
  std::vector<SymbolContext> contexts;
  for (const double s : scale_table(model.scale_floor)) {
    const int half = std::min(kMaxHalfWidth, static_cast<int>(std::ceil(s * z)));
    std::vector<double> masses;
    masses.reserve(static_cast<std::size_t>(2 * half + 2));
    for (int k = -half; k <= half; ++k) {
      masses.push_back(gaussian_bin_prob(k, s, model.scale_floor));
    }
    masses.push_back(2.0 * upper_tail((half + 0.5) / s));
    contexts.push_back(quantize_pmf(-half, masses));
  }
  return EntropyTable(std::move(contexts));
}

EntropyTable build_factorized_table(std::span<const double> locations,
                                    std::span<const double> scales,
                                    double tail_mass) {
  require(locations.size() == scales.size(), ErrorKind::kShapeMismatch,
          "factorized prior: location and scale counts differ");
  const double spread = std::log((1.0 - tail_mass) / tail_mass);
  std::vector<SymbolContext> contexts;
  for (std::size_t c = 0; c < locations.size(); ++c) {
    const double mu = locations[c];
    const double s = scales[c];
    require(std::isfinite(mu) && std::isfinite(s) && s > 0,
            ErrorKind::kInvalidArgument, "factorized prior: invalid parameters");
    const double center_d = std::clamp(std::round(mu), double(kRawMin), double(kRawMax));
    const auto center = static_cast<std::int32_t>(center_d);
    const int half = std::min(
        kMaxHalfWidth, static_cast<int>(std::ceil(s * spread)) + 1);
    std::vector<double> masses;
    masses.reserve(static_cast<std::size_t>(2 * half + 2));
    for (int k = -half; k <= half; ++k) {
      masses.push_back(logistic_bin_prob(center + k, mu, s));
    }
    const double lower = logistic_cdf(center - half - 0.5, mu, s);
    const double upper = 1.0 - logistic_cdf(center + half + 0.5, mu, s);
    masses.push_back(lower + upper);
    contexts.push_back(quantize_pmf(center - half, masses));
  }
  return EntropyTable(std::move(contexts));
}

EntropyTable build_factorized_table(const nn::HyperpriorModel& model) {
  const Tensor& loc = model.prior_location().value();
  const Tensor& log_scale = model.prior_log_scale().value();
  std::vector<double> mu(static_cast<std::size_t>(loc.numel()));
  std::vector<double> s(mu.size());
  for (std::int64_t c = 0; c < loc.numel(); ++c) {
    mu[c] = loc[c];
    s[c] = std::exp(static_cast<double>(log_scale[c]));
  }
  return build_factorized_table(mu, s, model.conditional().tail_mass);
}

double table_bits(std::span<const std::int32_t> values,
                  std::span<const std::uint32_t> contexts,
                  const EntropyTable& table) {
  require(values.size() == contexts.size(), ErrorKind::kShapeMismatch,
          "table_bits: value and context counts differ");
  double bits = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    bits += table.cost_bits(values[i], contexts[i]);
  }
  return bits;
}

}  // namespace icae::entropy
