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

#include "icae/range_coder.hpp"

#include <algorithm>
#include <string>

#include "icae/error.hpp"

namespace icae::entropy {
namespace {

constexpr std::uint64_t kTop = std::uint64_t{1} << 24;
constexpr std::uint64_t kFull = std::uint64_t{1} << 32;

std::uint32_t symbol_for(const SymbolContext& ctx, std::int32_t value, bool& escaped) {
  const std::int64_t idx = static_cast<std::int64_t>(value) - ctx.offset;
  escaped = idx < 0 || idx >= static_cast<std::int64_t>(ctx.alphabet_size());
  return escaped ? ctx.escape_symbol() : static_cast<std::uint32_t>(idx);
}

void encode_all(RangeEncoder& enc, std::span<const std::int32_t> values,
                std::span<const std::uint32_t> contexts, const EntropyTable& table) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const SymbolContext& ctx = table.context(contexts[i]);
    bool escaped = false;
    const std::uint32_t s = symbol_for(ctx, values[i], escaped);
    enc.encode(ctx.cdf[s], ctx.frequency(s));
    if (escaped) {
      require(values[i] >= kRawMin && values[i] <= kRawMax, ErrorKind::kInvalidArgument,
              "value " + std::to_string(values[i]) + " outside the codable range");
      enc.encode_raw16(static_cast<std::uint16_t>(static_cast<std::int16_t>(values[i])));
    }
  }
}

}  // namespace

void RangeEncoder::shift_low() {
  if (low_ < 0xFF000000u || low_ >= kFull) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t pending = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(std::uint32_t cum_low, std::uint32_t frequency) {
  require(frequency > 0 && cum_low + frequency <= kCdfTotal, ErrorKind::kInvalidArgument,
          "range coder: invalid frequency interval");
  const std::uint64_t lo = (range_ * cum_low) >> kCdfPrecision;
  const std::uint64_t hi = (range_ * (cum_low + frequency)) >> kCdfPrecision;
  low_ += lo;
  range_ = hi - lo;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_raw16(std::uint16_t value) {
  encode(static_cast<std::uint32_t>(value >> 8) << 8, 256);
  encode(static_cast<std::uint32_t>(value & 0xFF) << 8, 256);
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  std::vector<std::uint8_t> out = std::move(out_);
  // The first byte is the initial cache and always zero.
  out.erase(out.begin());
  return out;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ < bytes_.size()) return bytes_[pos_++];
  overrun_ = true;
  return 0;
}

std::uint32_t RangeDecoder::target() const {
  return static_cast<std::uint32_t>((((code_ + 1) << kCdfPrecision) - 1) / range_);
}

void RangeDecoder::consume(std::uint32_t cum_low, std::uint32_t frequency) {
  const std::uint64_t lo = (range_ * cum_low) >> kCdfPrecision;
  const std::uint64_t hi = (range_ * (cum_low + frequency)) >> kCdfPrecision;
  code_ -= lo;
  range_ = hi - lo;
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
}

std::uint16_t RangeDecoder::decode_raw16() {
  std::uint32_t high = target() >> 8;
  consume(high << 8, 256);
  std::uint32_t low = target() >> 8;
  consume(low << 8, 256);
  return static_cast<std::uint16_t>((high << 8) | low);
}

std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> values,
                                       std::span<const std::uint32_t> contexts,
                                       const EntropyTable& table) {
  require(values.size() == contexts.size(), ErrorKind::kShapeMismatch,
          "range_encode: " + std::to_string(values.size()) + " values but " +
              std::to_string(contexts.size()) + " contexts");
  RangeEncoder enc;
  encode_all(enc, values, contexts, table);
  return enc.finish();
}

std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       std::span<const std::uint32_t> contexts,
                                       const EntropyTable& table,
                                       std::size_t count) {
  require(contexts.size() == count, ErrorKind::kShapeMismatch,
          "range_decode: " + std::to_string(contexts.size()) + " contexts for " +
              std::to_string(count) + " symbols");
  for (const auto id : contexts) table.context(id);
  RangeDecoder dec(bytes);
  std::vector<std::int32_t> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const SymbolContext& ctx = table.context(contexts[i]);
    const std::uint32_t t = dec.target();
    const auto it = std::upper_bound(ctx.cdf.begin(), ctx.cdf.end(), t);
    const auto s = static_cast<std::uint32_t>(it - ctx.cdf.begin() - 1);
    dec.consume(ctx.cdf[s], ctx.frequency(s));
    if (s == ctx.escape_symbol()) {
      values[i] = static_cast<std::int16_t>(dec.decode_raw16());
    } else {
      values[i] = ctx.offset + static_cast<std::int32_t>(s);
    }
  }
  require(!dec.overrun(), ErrorKind::kIncompleteStream,
          "incomplete stream: data ends before all " + std::to_string(count) +
              " symbols were decoded");
  require(dec.consumed() == bytes.size(), ErrorKind::kCorruptStream,
          "corrupt stream: " + std::to_string(bytes.size() - dec.consumed()) +
              " unused bytes after the last symbol");
  RangeEncoder check;
  encode_all(check, values, contexts, table);
  require(check.finish() == std::vector<std::uint8_t>(bytes.begin(), bytes.end()),
          ErrorKind::kCorruptStream, "corrupt stream: segment does not decode consistently");
  return values;
}

}  // namespace icae::entropy
