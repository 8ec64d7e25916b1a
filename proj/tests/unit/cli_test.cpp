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

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "icae/file_io.hpp"
#include "icae/pipeline.hpp"

#include <png.h>
#include "synthetic.hpp"

namespace icae {
namespace {

namespace fs = std::filesystem;
using testing::synthetic_image;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("icae_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Codec toy_codec(nn::Variant v = nn::Variant::kBaseline) {
  nn::ArchConfig a;
  a.variant = v;
  a.n_channels = 8;
  a.m_channels = 8;
  return Codec(nn::HyperpriorModel::create(a, 0.01, 5));
}

std::vector<fs::path> write_images(const fs::path& dir, int count, int w, int h) {
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "kodim%02d.png", i + 1);
    paths.push_back(dir / name);
    write_png(paths.back(), synthetic_image(w + i, h, 100 + i));
  }
  return paths;
}

void write_rgba(const fs::path& path) {
  png_image rgba{};
  rgba.version = PNG_IMAGE_VERSION;
  rgba.width = 8;
  rgba.height = 8;
  rgba.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> px(8 * 8 * 4, 90);
  ASSERT_TRUE(png_image_write_to_file(&rgba, path.c_str(), 0, px.data(), 0, nullptr));
}

std::vector<fs::path> listing(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Pipeline, BatchStreamsMatchSingleImageRuns) {
  const fs::path dir = fresh_dir("batch");
  const auto images = write_images(dir / "in", 5, 70, 50);
  const Codec codec = toy_codec();
  const auto batch = app::encode_files(codec, images, dir / "batch");
  app::BatchOptions parallel;
  parallel.jobs = 3;
  const auto threaded = app::encode_files(codec, images, dir / "threaded", parallel);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto single = app::encode_files(toy_codec(), {images[i]}, dir / "single");
    ASSERT_TRUE(batch[i].ok && threaded[i].ok && single[0].ok);
    const auto a = read_file(batch[i].output);
    EXPECT_EQ(a, read_file(single[0].output));
    EXPECT_EQ(a, read_file(threaded[i].output));
    EXPECT_EQ(a, codec.encode(read_image(images[i])).stream);
  }
}

TEST(Pipeline, TwentyFourImageReportInColumnOrder) {
  const fs::path dir = fresh_dir("report");
  const auto images = write_images(dir / "in", 24, 64, 64);
  const auto result = app::evaluate_files(toy_codec(), images, dir / "out");
  ASSERT_TRUE(result.all_ok());
  ASSERT_EQ(result.report.rows.size(), 24u);
  const std::string csv = metrics::to_csv(result.report);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "name,bpp,psnr_db,ms_ssim,encode_s,decode_s");
  int rows = 0;
  std::string last;
  while (std::getline(lines, line)) {
    ++rows;
    last = line;
  }
  EXPECT_EQ(rows, 25);
  EXPECT_EQ(last.rfind("average,", 0), 0u);
  EXPECT_EQ(result.report.rows.front().name, "kodim01");
  EXPECT_EQ(result.report.rows.back().name, "kodim24");
  for (std::size_t i = 0; i < result.files.size(); ++i) {
    const auto& row = result.files[i].row;
    const auto stream = read_file(dir / "out" / (row.name + ".icae"));
    EXPECT_DOUBLE_EQ(row.bpp, metrics::bpp(stream.size(), 64, 64 + static_cast<int>(i)));
  }
}

TEST(Pipeline, TimingUsesOnlyTheInjectedClockAroundTheCodec) {
  const fs::path dir = fresh_dir("clock");
  const auto images = write_images(dir / "in", 3, 64, 64);
  const Codec codec = toy_codec();
  std::atomic<int> calls{0};
  app::BatchOptions opts;
  opts.clock = [&] { return 10.0 * calls++; };
  const auto enc = app::encode_files(codec, images, dir / "enc", opts);
  EXPECT_EQ(calls.load(), 6);
  for (const auto& r : enc) EXPECT_DOUBLE_EQ(r.seconds, 10.0);

  std::vector<fs::path> streams;
  for (const auto& r : enc) streams.push_back(r.output);
  calls = 0;
  const auto dec = app::decode_files(codec, streams, dir / "dec", opts);
  EXPECT_EQ(calls.load(), 6);
  for (const auto& r : dec) EXPECT_DOUBLE_EQ(r.seconds, 10.0);

  calls = 0;
  const auto ev = app::evaluate_files(codec, images, dir / "ev", opts);
  EXPECT_EQ(calls.load(), 12);
  for (const auto& f : ev.files) {
    EXPECT_DOUBLE_EQ(f.row.encode_s, 10.0);
    EXPECT_DOUBLE_EQ(f.row.decode_s, 10.0);
  }
}

TEST(Pipeline, OnDiskRoundTripMatchesInMemoryCodec) {
  const fs::path dir = fresh_dir("disk");
  const Image img = synthetic_image(333, 201, 7);
  write_png(dir / "odd.png", img);
  const Codec codec = toy_codec(nn::Variant::kDeepened);
  const auto enc = app::encode_files(codec, {dir / "odd.png"}, dir / "s");
  ASSERT_TRUE(enc[0].ok);
  const auto dec = app::decode_files(codec, {enc[0].output}, dir / "r");
  ASSERT_TRUE(dec[0].ok) << dec[0].error;
  const Image recon = read_image(dec[0].output);
  EXPECT_EQ(recon.width, 333);
  EXPECT_EQ(recon.height, 201);
  const auto memory = codec.decode(codec.encode(img).stream);
  EXPECT_EQ(recon, memory.image);
  const auto from_file = codec.decode(read_file(enc[0].output));
  EXPECT_TRUE(std::equal(from_file.latents.y_hat.data().begin(),
                         from_file.latents.y_hat.data().end(),
                         memory.latents.y_hat.data().begin()));
  EXPECT_TRUE(std::equal(from_file.latents.z_hat.data().begin(),
                         from_file.latents.z_hat.data().end(),
                         memory.latents.z_hat.data().begin()));
}

TEST(Pipeline, PerFileErrorsDoNotStopTheBatch) {
  const fs::path dir = fresh_dir("errors");
  auto images = write_images(dir / "in", 2, 64, 64);
  write_rgba(dir / "in" / "rgba.png");
  images.insert(images.begin() + 1, dir / "in" / "rgba.png");
  images.push_back(dir / "in" / "missing.png");
  const auto res = app::encode_files(toy_codec(), images, dir / "out");
  ASSERT_EQ(res.size(), 4u);
  EXPECT_TRUE(res[0].ok);
  EXPECT_FALSE(res[1].ok);
  EXPECT_NE(res[1].error.find("alpha channel unsupported"), std::string::npos);
  EXPECT_TRUE(res[2].ok);
  EXPECT_FALSE(res[3].ok);
  EXPECT_EQ(listing(dir / "out"), (std::vector<fs::path>{"kodim01.icae", "kodim02.icae"}));
}

TEST(Pipeline, CorruptStreamWritesNoImage) {
  const fs::path dir = fresh_dir("corrupt");
  const auto images = write_images(dir / "in", 1, 64, 64);
  const Codec codec = toy_codec();
  const auto enc = app::encode_files(codec, images, dir / "s");
  auto bytes = read_file(enc[0].output);
  bytes[bytes.size() / 2] ^= 0x10;
  write_file(dir / "s" / "bad.icae", bytes);
  bytes.resize(bytes.size() - 3);
  write_file(dir / "s" / "short.icae", bytes);
  const auto dec =
      app::decode_files(codec, {dir / "s" / "bad.icae", dir / "s" / "short.icae"}, dir / "r");
  EXPECT_FALSE(dec[0].ok);
  EXPECT_FALSE(dec[1].ok);
  EXPECT_TRUE(listing(dir / "r").empty());
}

TEST(Pipeline, DuplicateStemsAreRejected) {
  const fs::path dir = fresh_dir("dups");
  const auto a = write_images(dir / "a", 1, 64, 64);
  const auto b = write_images(dir / "b", 1, 64, 64);
  const auto res = app::encode_files(toy_codec(), {a[0], b[0]}, dir / "out");
  EXPECT_FALSE(res[0].ok);
  EXPECT_FALSE(res[1].ok);
  EXPECT_TRUE(listing(dir / "out").empty());
}

TEST(Pipeline, ExternalIdenticalPairsScorePerfectly) {
  const fs::path dir = fresh_dir("external");
  const auto images = write_images(dir / "in", 2, 200, 180);
  fs::create_directories(dir / "recon");
  for (const auto& p : images) fs::copy_file(p, dir / "recon" / p.filename());
  write_file(dir / "recon" / "kodim01.jp2", std::vector<std::uint8_t>(1000, 1));
  const auto res = app::evaluate_external(images, dir / "recon");
  ASSERT_TRUE(res.all_ok());
  EXPECT_DOUBLE_EQ(res.report.rows[0].psnr_db, 100.0);
  EXPECT_NEAR(res.report.rows[0].ms_ssim, 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(res.report.rows[0].bpp, 8000.0 / (200 * 180));
  EXPECT_TRUE(std::isnan(res.report.rows[1].bpp));
  EXPECT_TRUE(std::isnan(res.report.rows[0].encode_s));
}

TEST(Pipeline, ExternalMissingOrMismatchedReconstructionFails) {
  const fs::path dir = fresh_dir("external_bad");
  const auto images = write_images(dir / "in", 2, 64, 64);
  fs::create_directories(dir / "recon");
  write_png(dir / "recon" / "kodim01.png", synthetic_image(63, 64, 1));
  const auto res = app::evaluate_external(images, dir / "recon");
  EXPECT_FALSE(res.files[0].file.ok);
  EXPECT_FALSE(res.files[1].file.ok);
  EXPECT_TRUE(res.report.rows.empty());
  EXPECT_FALSE(res.all_ok());
}

TEST(Pipeline, FootnoteCarriesReferencePoint) {
  const std::string note = app::reference_footnote();
  EXPECT_NE(note.find("0.4242"), std::string::npos);
  EXPECT_NE(note.find("31.88"), std::string::npos);
  EXPECT_NE(note.find("0.9677"), std::string::npos);
}

int run(const std::string& args) {
  const std::string cmd = std::string(ICAE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, EndToEndExitCodes) {
  const fs::path dir = fresh_dir("cli");
  write_images(dir / "data", 3, 64, 64);
  {
    std::ofstream cfg(dir / "train.cfg");
    cfg << "iterations=3\nlog_interval=1\npatch_size=64\nbatch_size=1\nn_channels=8\n"
           "m_channels=8\ndataset=" << (dir / "data").string()
        << "\noutput_dir=" << (dir / "run").string() << '\n';
  }
  ASSERT_EQ(run("train --config " + (dir / "train.cfg").string()), 0);
  ASSERT_TRUE(fs::exists(dir / "run" / "model.ckpt"));
  ASSERT_TRUE(fs::exists(dir / "run" / "curve.csv"));
  ASSERT_TRUE(fs::exists(dir / "run" / "manifest.txt"));
  const std::string model = " --model " + (dir / "run" / "model.ckpt").string();
  const std::string data = (dir / "data").string();
  EXPECT_EQ(run("encode" + model + " --out " + (dir / "enc").string() + " " + data +
                "/kodim01.png " + data + "/kodim02.png"),
            0);
  EXPECT_EQ(run("--jobs 2 decode" + model + " --out " + (dir / "dec").string() + " " +
                (dir / "enc" / "kodim01.icae").string()),
            0);
  EXPECT_EQ(run("eval" + model + " --out " + (dir / "ev").string() + " --csv " +
                (dir / "m.csv").string() + " " + data + "/kodim03.png"),
            0);
  EXPECT_TRUE(fs::exists(dir / "m.csv"));
  EXPECT_EQ(run("encode" + model + " --out " + (dir / "enc").string() + " " + data +
                "/kodim01.png " + data + "/nope.png"),
            1);
  EXPECT_EQ(run("encode --model " + (dir / "missing.ckpt").string() + " --out " +
                (dir / "x").string() + " " + data + "/kodim01.png"),
            2);
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "iterations=3\nlearning_rat=1\n";
  }
  EXPECT_EQ(run("train --config " + (dir / "bad.cfg").string()), 2);
}

}  // namespace
}  // namespace icae
