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

#include "icae/codestream.hpp"

#include <zlib.h>

#include <algorithm>
#include <string>

#include "icae/byte_io.hpp"
#include "icae/error.hpp"

namespace icae::entropy {
namespace {

constexpr std::uint8_t kMagic[4] = {'I', 'C', 'A', 'E'};

void write_header(ByteWriter& w, const StreamHeader& h) {
  w.raw(std::span<const std::uint8_t>(kMagic, 4));
  w.u8(h.version);
  w.u8(h.variant);
  w.be(h.n_channels, 2);
  w.be(h.m_channels, 2);
  w.be(h.height, 4);
  w.be(h.width, 4);
}

std::uint32_t checksum(const StreamHeader& header, std::span<const std::uint8_t> z,
                       std::span<const std::uint8_t> y) {
  const auto head = serialize_header(header);
  std::uint32_t c = crc32(head);
  c = crc32(z, c);
  return crc32(y, c);
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed) {
  uLong c = seed;
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - pos, 1u << 30));
    c = ::crc32(c, data.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::vector<std::uint8_t> serialize_header(const StreamHeader& header) {
  ByteWriter w;
  write_header(w, header);
  return w.take();
}

std::vector<std::uint8_t> pack_stream(const StreamParts& parts) {
  require(parts.z_bytes.size() <= 0xFFFFFFFFu && parts.y_bytes.size() <= 0xFFFFFFFFu,
          ErrorKind::kInvalidArgument, "segment too large for the container");
  ByteWriter w;
  write_header(w, parts.header);
  w.be(parts.z_bytes.size(), 4);
  w.raw(parts.z_bytes);
  w.be(parts.y_bytes.size(), 4);
  w.raw(parts.y_bytes);
  return w.take();
}

StreamParts unpack_stream(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  require(bytes.size() >= 4 && std::equal(kMagic, kMagic + 4, bytes.begin()),
          ErrorKind::kBadMagic, "bad magic: not an ICAE stream");
  r.take(4);
  StreamParts parts;
  StreamHeader& h = parts.header;
  h.version = r.u8();
  require(h.version == kStreamVersion, ErrorKind::kUnsupportedVersion,
          "unsupported stream version " + std::to_string(h.version));
  h.variant = r.u8();
  require(h.variant <= 1, ErrorKind::kCorruptStream,
          "unknown architecture variant " + std::to_string(h.variant));
  h.n_channels = static_cast<std::uint16_t>(r.be(2));
  h.m_channels = static_cast<std::uint16_t>(r.be(2));
  h.height = static_cast<std::uint32_t>(r.be(4));
  h.width = static_cast<std::uint32_t>(r.be(4));
  require(h.n_channels > 0 && h.m_channels > 0, ErrorKind::kCorruptStream,
          "header declares zero channels");
  require(h.height > 0 && h.width > 0, ErrorKind::kCorruptStream,
          "header declares an empty image");
  for (auto* segment : {&parts.z_bytes, &parts.y_bytes}) {
    const auto len = static_cast<std::size_t>(r.be(4));
    require(len <= r.remaining(), ErrorKind::kSegmentOverrun,
            "segment length " + std::to_string(len) + " overruns the stream (" +
                std::to_string(r.remaining()) + " bytes left)");
    const auto s = r.take(len);
    segment->assign(s.begin(), s.end());
  }
  require(r.remaining() == 0, ErrorKind::kCorruptStream,
          std::to_string(r.remaining()) + " trailing bytes after the y segment");
  return parts;
}

std::vector<std::uint8_t> seal_y_segment(const StreamHeader& header,
                                         std::span<const std::uint8_t> z_bytes,
                                         std::span<const std::uint8_t> y_coded) {
  ByteWriter w;
  w.raw(y_coded);
  w.be(checksum(header, z_bytes, y_coded), 4);
  return w.take();
}

std::span<const std::uint8_t> open_y_segment(const StreamParts& parts) {
  require(parts.y_bytes.size() >= 4, ErrorKind::kIncompleteStream,
          "incomplete stream: y segment shorter than its checksum");
  const std::span<const std::uint8_t> all(parts.y_bytes);
  const auto coded = all.first(all.size() - 4);
  ByteReader tail(all.last(4));
  const auto stored = static_cast<std::uint32_t>(tail.be(4));
  require(stored == checksum(parts.header, parts.z_bytes, coded), ErrorKind::kChecksum,
          "corrupt stream: checksum mismatch");
  return coded;
}

}  // namespace icae::entropy
