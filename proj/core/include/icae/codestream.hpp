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

namespace icae::entropy {

inline constexpr std::uint8_t kStreamVersion = 1;

struct StreamHeader {
  std::uint8_t version = kStreamVersion;
  std::uint8_t variant = 0;
  std::uint16_t n_channels = 0;
  std::uint16_t m_channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  bool operator==(const StreamHeader&) const = default;
};

struct StreamParts {
  StreamHeader header;
  std::vector<std::uint8_t> z_bytes;
  std::vector<std::uint8_t> y_bytes;

  bool operator==(const StreamParts&) const = default;
};

// Big-endian layout: "ICAE", version u8, variant u8, N u16, M u16,
// height u32, width u32, z_len u32, z bytes, y_len u32, y bytes.
inline constexpr std::size_t kHeaderBytes = 18;

std::vector<std::uint8_t> serialize_header(const StreamHeader& header);
std::vector<std::uint8_t> pack_stream(const StreamParts& parts);
StreamParts unpack_stream(std::span<const std::uint8_t> bytes);

// The y segment carries the range-coded bytes followed by a big-endian
// CRC-32 over the header fields, the z segment and the coded y bytes.
std::vector<std::uint8_t> seal_y_segment(const StreamHeader& header,
                                         std::span<const std::uint8_t> z_bytes,
                                         std::span<const std::uint8_t> y_coded);
// Verifies the checksum and returns the coded y bytes.
std::span<const std::uint8_t> open_y_segment(const StreamParts& parts);

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed = 0);

}  // namespace icae::entropy
