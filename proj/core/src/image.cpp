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

#include "icae/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>

#include "icae/error.hpp"
#include "icae/file_io.hpp"

namespace icae {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
constexpr std::int64_t kMaxPixels = std::int64_t{1} << 28;

struct PngImage {
  png_image img{};
  PngImage() {
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
};

Image decode_png(std::span<const std::uint8_t> bytes) {
  PngImage p;
  if (!png_image_begin_read_from_memory(&p.img, bytes.data(), bytes.size())) {
    fail(ErrorKind::kUnsupportedFormat, std::string("unreadable PNG: ") + p.img.message);
  }
  require((p.img.format & PNG_FORMAT_FLAG_ALPHA) == 0, ErrorKind::kAlphaUnsupported,
          "alpha channel unsupported");
  require((p.img.format & PNG_FORMAT_FLAG_LINEAR) == 0, ErrorKind::kUnsupportedFormat,
          "16-bit images are not supported");
  require(p.img.width > 0 && p.img.height > 0 &&
              std::int64_t{p.img.width} * p.img.height <= kMaxPixels,
          ErrorKind::kUnsupportedFormat, "PNG dimensions out of range");
  p.img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(p.img.width), static_cast<int>(p.img.height));
  if (!png_image_finish_read(&p.img, nullptr, out.rgb.data(), 0, nullptr)) {
    fail(ErrorKind::kUnsupportedFormat, std::string("corrupt PNG: ") + p.img.message);
  }
  return out;
}

class PpmParser {
 public:
  explicit PpmParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long number() {
    skip_space();
    require(pos_ < bytes_.size() && std::isdigit(bytes_[pos_]), ErrorKind::kUnsupportedFormat,
            "malformed PPM header");
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      require(v <= (1L << 30), ErrorKind::kUnsupportedFormat, "PPM value out of range");
    }
    return v;
  }
  void single_space() {
    require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), ErrorKind::kUnsupportedFormat,
            "malformed PPM header");
    ++pos_;
  }
  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  const bool binary = bytes[1] == '6';
  PpmParser parser(bytes);
  parser.advance(2);
  const long w = parser.number();
  const long h = parser.number();
  const long maxval = parser.number();
  require(w > 0 && h > 0 && w * h <= kMaxPixels, ErrorKind::kUnsupportedFormat,
          "PPM dimensions out of range");
  require(maxval > 0 && maxval <= 255, ErrorKind::kUnsupportedFormat,
          maxval > 255 ? "16-bit images are not supported" : "invalid PPM maxval");
  Image out(static_cast<int>(w), static_cast<int>(h));
  if (binary) {
    parser.single_space();
    require(bytes.size() - parser.pos() >= out.rgb.size(), ErrorKind::kUnsupportedFormat,
            "truncated PPM data");
    std::memcpy(out.rgb.data(), bytes.data() + parser.pos(), out.rgb.size());
  } else {
    for (auto& v : out.rgb) {
      const long s = parser.number();
      require(s <= maxval, ErrorKind::kUnsupportedFormat, "PPM sample exceeds maxval");
      v = static_cast<std::uint8_t>(s);
    }
  }
  if (maxval != 255) {
    for (auto& v : out.rgb) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return out;
}

}  // namespace

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {
  require(w >= 0 && h >= 0, ErrorKind::kInvalidArgument, "negative image dimensions");
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::equal(kPngSignature, kPngSignature + 8, bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '3')) {
    return decode_ppm(bytes);
  }
  fail(ErrorKind::kUnsupportedFormat, "unsupported image format (expected PNG or PPM)");
}

Image read_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

std::vector<std::uint8_t> encode_png(const Image& image) {
  require(image.width > 0 && image.height > 0, ErrorKind::kInvalidArgument,
          "cannot encode an empty image");
  PngImage p;
  p.img.width = static_cast<png_uint_32>(image.width);
  p.img.height = static_cast<png_uint_32>(image.height);
  p.img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(p.img, size, 0, image.rgb.data(), 0, nullptr)) {
    fail(ErrorKind::kIo, std::string("PNG encode failed: ") + p.img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&p.img, out.data(), &size, 0, image.rgb.data(), 0,
                                 nullptr)) {
    fail(ErrorKind::kIo, std::string("PNG encode failed: ") + p.img.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string head =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  write_file(path, encode_png(image));
}

Image pad_edge(const Image& image, int multiple) {
  require(multiple > 0 && image.width > 0 && image.height > 0, ErrorKind::kInvalidArgument,
          "pad_edge: invalid arguments");
  const int w = (image.width + multiple - 1) / multiple * multiple;
  const int h = (image.height + multiple - 1) / multiple * multiple;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, image.height - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(x, image.width - 1);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  }
  return out;
}

Image crop(const Image& image, int width, int height) {
  require(width > 0 && height > 0 && width <= image.width && height <= image.height,
          ErrorKind::kInvalidArgument, "crop: region exceeds the image");
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    std::memcpy(out.rgb.data() + static_cast<std::size_t>(y) * width * 3,
                image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3,
                static_cast<std::size_t>(width) * 3);
  }
  return out;
}

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

Tensor image_to_tensor(const Image& image, bool linearize) {
  Real lut[256];
  for (int i = 0; i < 256; ++i) {
    const double v = i / 255.0;
    lut[i] = static_cast<Real>(linearize ? srgb_to_linear(v) : v);
  }
  Tensor t(Shape{1, 3, image.height, image.width});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) t.at(0, c, y, x) = lut[image.at(x, y, c)];
    }
  }
  return t;
}

Image tensor_to_image(const Tensor& t, bool delinearize) {
  const Shape& s = t.shape();
  require(s.n == 1 && s.c == 3, ErrorKind::kShapeMismatch,
          "tensor_to_image expects shape (1, 3, H, W), got " + s.str());
  Image out(static_cast<int>(s.w), static_cast<int>(s.h));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        double v = t.at(0, c, y, x);
        if (!std::isfinite(v)) v = 0.0;
        v = std::clamp(v, 0.0, 1.0);
        if (delinearize) v = linear_to_srgb(v);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return out;
}

}  // namespace icae
