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
#include <span>
#include <vector>

#include "icae/model.hpp"

namespace icae::entropy {

inline constexpr int kCdfPrecision = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfPrecision;
// Out-of-alphabet values are sent as an escape symbol plus a raw 16-bit
// two's-complement value.
inline constexpr std::int32_t kRawMin = -32768;
inline constexpr std::int32_t kRawMax = 32767;
inline constexpr int kMaxHalfWidth = 2048;

// Integer cumulative frequencies for one coding context. The alphabet is
// [offset, offset + alphabet_size()) followed by one escape symbol.
struct SymbolContext {
  std::int32_t offset = 0;
  std::vector<std::uint32_t> cdf;  // size alphabet_size() + 2; cdf.back() == kCdfTotal

  std::uint32_t symbol_count() const { return static_cast<std::uint32_t>(cdf.size() - 1); }
  std::uint32_t alphabet_size() const { return symbol_count() - 1; }
  std::uint32_t escape_symbol() const { return alphabet_size(); }
  std::uint32_t frequency(std::uint32_t symbol) const { return cdf[symbol + 1] - cdf[symbol]; }
};

// Quantizes a probability mass function (alphabet masses followed by the
// escape mass) to frequencies summing to exactly kCdfTotal, every one >= 1.
SymbolContext quantize_pmf(std::int32_t offset, std::span<const double> masses);

class EntropyTable {
 public:
  EntropyTable() = default;
  explicit EntropyTable(std::vector<SymbolContext> contexts);

  std::size_t size() const { return contexts_.size(); }
  const SymbolContext& context(std::uint32_t id) const;
  const std::vector<SymbolContext>& contexts() const { return contexts_; }

  // Canonical byte image of the table, for encoder/decoder comparison.
  std::vector<std::uint8_t> serialize() const;

  // -log2 of the coded probability of `value` in context `id`, including the
  // 16 raw bits of an escaped value.
  double cost_bits(std::int32_t value, std::uint32_t id) const;

  bool operator==(const EntropyTable&) const = default;

 private:
  std::vector<SymbolContext> contexts_;
};

// One context per entry of scale_table(): Gaussian bin masses over
// |k| <= ceil(s * z) where z is the standard normal quantile of the tail mass.
EntropyTable build_gaussian_table(const nn::GaussianConditional& model);

// One context per channel of the factorized prior.
EntropyTable build_factorized_table(std::span<const double> locations,
                                    std::span<const double> scales,
                                    double tail_mass = 1e-9);
EntropyTable build_factorized_table(const nn::HyperpriorModel& model);

// Table-discretized cost of a symbol sequence in bits.
double table_bits(std::span<const std::int32_t> values,
                  std::span<const std::uint32_t> contexts,
                  const EntropyTable& table);

}  // namespace icae::entropy
