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

#include "icae/entropy_table.hpp"

namespace icae::entropy {

// Byte-emitting range coder with a 64-bit low register (carry propagation
// through a cached byte) and a 32-bit range. Each step splits the range
// exactly at floor(range * cum / 2^16).
class RangeEncoder {
 public:
  void encode(std::uint32_t cum_low, std::uint32_t frequency);
  // Sixteen raw bits as two uniform bytes.
  void encode_raw16(std::uint16_t value);
  // Flushes the four bytes of the low register and returns the stream.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint64_t range_ = std::uint64_t{1} << 32;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  // Cumulative-frequency target in [0, 2^16) for the next symbol.
  std::uint32_t target() const;
  void consume(std::uint32_t cum_low, std::uint32_t frequency);
  std::uint16_t decode_raw16();

  // True once the decoder needed bytes beyond the end of the input.
  bool overrun() const { return overrun_; }
  std::size_t consumed() const { return pos_; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  bool overrun_ = false;
  std::uint64_t code_ = 0;
  std::uint64_t range_ = std::uint64_t{1} << 32;
};

// Codes values[i] in context contexts[i]. Values outside a context's
// alphabet are sent as the escape symbol followed by their 16-bit two's
// complement; values outside [-32768, 32767] are rejected.
std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> values,
                                       std::span<const std::uint32_t> contexts,
                                       const EntropyTable& table);

// Inverse of range_encode. A stream that ends early raises
// kIncompleteStream; surplus bytes, or symbols whose re-encoding differs
// from `bytes`, raise kCorruptStream.
std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       std::span<const std::uint32_t> contexts,
                                       const EntropyTable& table,
                                       std::size_t count);

}  // namespace icae::entropy
