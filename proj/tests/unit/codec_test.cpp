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

#include <filesystem>

#include "icae/codec.hpp"
#include "icae/error.hpp"
#include "icae/file_io.hpp"
#include "icae/quantize.hpp"

#include <png.h>
#include "synthetic.hpp"

namespace icae {
namespace {

using testing::synthetic_image;

nn::HyperpriorModel toy_model(nn::Variant v, std::uint64_t seed, int n = 8, int m = 8) {
  nn::ArchConfig a;
  a.variant = v;
  a.n_channels = n;
  a.m_channels = m;
  return nn::HyperpriorModel::create(a, 0.01, seed);
}

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

TEST(Codec, LatentsRoundTripBitExactly) {
  for (const auto v : {nn::Variant::kBaseline, nn::Variant::kDeepened}) {
    const Codec codec(toy_model(v, 3));
    const Image img = synthetic_image(96, 70, 4);
    const EncodeOutput enc = codec.encode(img);
    const DecodeOutput dec = codec.decode(enc.stream);
    EXPECT_TRUE(same(enc.latents.y_hat, dec.latents.y_hat));
    EXPECT_TRUE(same(enc.latents.z_hat, dec.latents.z_hat));
    EXPECT_EQ(dec.image.width, 96);
    EXPECT_EQ(dec.image.height, 70);
    EXPECT_EQ(enc.latents.y_hat.shape(), (Shape{1, 8, 8, 8}));
    EXPECT_EQ(enc.latents.z_hat.shape(), (Shape{1, 8, 2, 2}));
  }
}

TEST(Codec, OddDimensionsAreRestoredExactly) {
  const Codec codec(toy_model(nn::Variant::kBaseline, 1));
  const Image img = synthetic_image(501, 333, 9);
  const EncodeOutput enc = codec.encode(img);
  const auto parts = entropy::unpack_stream(enc.stream);
  EXPECT_EQ(parts.header.width, 501u);
  EXPECT_EQ(parts.header.height, 333u);
  EXPECT_EQ(enc.latents.y_hat.shape(), (Shape{1, 8, 384 / 16, 512 / 16}));
  const DecodeOutput dec = codec.decode(enc.stream);
  EXPECT_EQ(dec.image.width, 501);
  EXPECT_EQ(dec.image.height, 333);
  EXPECT_EQ(dec.image.rgb.size(), 501u * 333u * 3u);
}

TEST(Codec, DeterministicStreams) {
  const Image img = synthetic_image(64, 64, 2);
  const Codec a(toy_model(nn::Variant::kDeepened, 5));
  const Codec b(toy_model(nn::Variant::kDeepened, 5));
  EXPECT_EQ(a.encode(img).stream, b.encode(img).stream);
  EXPECT_EQ(a.gaussian_table().serialize(), b.gaussian_table().serialize());
  EXPECT_EQ(a.factorized_table().serialize(), b.factorized_table().serialize());
  EXPECT_EQ(a.decode(a.encode(img).stream).image, b.decode(b.encode(img).stream).image);
}

TEST(Codec, TablesFromReloadedCheckpointAreIdentical) {
  const auto model = toy_model(nn::Variant::kBaseline, 8);
  const Codec a(model);
  const Codec b(nn::deserialize_checkpoint(nn::serialize_checkpoint(model)));
  EXPECT_EQ(a.gaussian_table().serialize(), b.gaussian_table().serialize());
  EXPECT_EQ(a.factorized_table().serialize(), b.factorized_table().serialize());
}

TEST(Codec, StreamSizeWithinRateBudget) {
  const Codec codec(toy_model(nn::Variant::kBaseline, 2));
  const EncodeOutput enc = codec.encode(synthetic_image(128, 64, 1));
  const double framing = (entropy::kHeaderBytes + 8 + 4) * 8.0;
  EXPECT_LE(enc.stream.size() * 8.0, enc.table_bits + 64 + framing);
}

TEST(Codec, InferenceNeverAddsNoise) {
  const Codec codec(toy_model(nn::Variant::kBaseline, 2));
  const auto before = entropy::quantize_counts();
  const auto enc = codec.encode(synthetic_image(64, 64, 1));
  codec.decode(enc.stream);
  const auto after = entropy::quantize_counts();
  EXPECT_EQ(after.noise, before.noise);
  EXPECT_GT(after.round, before.round);
}

TEST(Codec, CorruptionAlwaysFails) {
  const Codec codec(toy_model(nn::Variant::kBaseline, 6));
  const auto stream = codec.encode(synthetic_image(64, 128, 3)).stream;
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    auto bad = stream;
    if (i % 2 == 0) {
      bad.resize(rng.uniform_int(bad.size()));
    } else {
      bad[rng.uniform_int(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.uniform_int(255));
    }
    EXPECT_THROW(codec.decode(bad), Error) << "case " << i;
  }
}

TEST(Codec, ModelMismatchIsNamed) {
  const Codec a(toy_model(nn::Variant::kBaseline, 1));
  const Codec b(toy_model(nn::Variant::kDeepened, 1));
  const auto stream = a.encode(synthetic_image(64, 64, 1)).stream;
  try {
    b.decode(stream);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kModelMismatch);
  }
}

TEST(Image, PngRoundTripAndAlphaRejection) {
  const Image img = synthetic_image(37, 21, 5);
  const auto png = encode_png(img);
  EXPECT_EQ(decode_image(png), img);
  EXPECT_EQ(decode_image(encode_ppm(img)), img);

  png_image rgba{};
  rgba.version = PNG_IMAGE_VERSION;
  rgba.width = 4;
  rgba.height = 4;
  rgba.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> px(4 * 4 * 4, 200);
  png_alloc_size_t size = 0;
  ASSERT_TRUE(png_image_write_get_memory_size(rgba, size, 0, px.data(), 0, nullptr));
  std::vector<std::uint8_t> buf(size);
  ASSERT_TRUE(png_image_write_to_memory(&rgba, buf.data(), &size, 0, px.data(), 0, nullptr));
  buf.resize(size);
  try {
    decode_image(buf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAlphaUnsupported);
    EXPECT_STREQ(e.what(), "alpha channel unsupported");
  }
}

TEST(Image, SixteenBitAndUnknownFormatsRejected) {
  const std::string ppm16 = "P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06";
  EXPECT_THROW(decode_image(std::vector<std::uint8_t>(ppm16.begin(), ppm16.end())), Error);
  const std::vector<std::uint8_t> junk{'G', 'I', 'F', '8'};
  EXPECT_THROW(decode_image(junk), Error);
}

TEST(Image, EdgePaddingAndCrop) {
  const Image img = synthetic_image(500, 333, 7);
  const Image padded = pad_edge(img, 64);
  EXPECT_EQ(padded.width, 512);
  EXPECT_EQ(padded.height, 384);
  EXPECT_EQ(padded.at(511, 383, 1), img.at(499, 332, 1));
  EXPECT_EQ(padded.at(505, 10, 2), img.at(499, 10, 2));
  EXPECT_EQ(crop(padded, 500, 333), img);
}

TEST(Image, SrgbTransfer) {
  EXPECT_EQ(srgb_to_linear(0.0), 0.0);
  EXPECT_NEAR(srgb_to_linear(1.0), 1.0, 1e-15);
  EXPECT_NEAR(srgb_to_linear(188.0 / 255.0), 0.5029, 5e-5);
  for (int i = 0; i < 256; ++i) {
    const Image px(1, 1, static_cast<std::uint8_t>(i));
    EXPECT_EQ(tensor_to_image(image_to_tensor(px, true), true), px);
  }
}

TEST(FileIo, WriteIsAtomic) {
  const auto dir = std::filesystem::temp_directory_path() / "icae_fileio_test";
  std::filesystem::create_directories(dir);
  const std::vector<std::uint8_t> data{1, 2, 3};
  write_file(dir / "a.bin", data);
  EXPECT_EQ(read_file(dir / "a.bin"), data);
  EXPECT_FALSE(std::filesystem::exists(dir / "a.bin.partial"));
  EXPECT_THROW(write_file(dir / "missing" / "b.bin", data), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace icae
