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

#include "icae/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "icae/error.hpp"
#include "icae/file_io.hpp"

namespace icae::app {
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void run_indexed(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& th : threads) th.join();
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    const std::string kind = to_string(err->kind());
    const std::string what = err->what();
    return what.starts_with(kind) ? what : kind + ": " + what;
  }
  return e.what();
}

std::vector<bool> duplicate_stems(const std::vector<fs::path>& inputs) {
  std::map<std::string, int> seen;
  for (const auto& p : inputs) ++seen[p.stem().string()];
  std::vector<bool> dup(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) dup[i] = seen[inputs[i].stem().string()] > 1;
  return dup;
}

template <typename Fn>
void guarded(FileResult& r, bool duplicate, Fn&& fn) {
  try {
    require(!duplicate, ErrorKind::kInvalidArgument,
            "another input has the same name " + r.input.stem().string());
    fn();
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = describe(e);
    r.output.clear();
  }
}

void check_complete(const Image& img, int width, int height) {
  require(img.width == width && img.height == height &&
              img.rgb.size() == static_cast<std::size_t>(width) * height * 3,
          ErrorKind::kCorruptStream, "reconstruction is incomplete");
}

std::optional<fs::path> find_with_stem(const fs::path& dir, const std::string& stem,
                                       const std::vector<std::string>& exts, bool include) {
  std::vector<fs::path> hits;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().stem().string() != stem) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const bool listed = std::find(exts.begin(), exts.end(), ext) != exts.end();
    if (listed == include) hits.push_back(entry.path());
  }
  if (hits.empty()) return std::nullopt;
  std::sort(hits.begin(), hits.end());
  return hits.front();
}

double score_ms_ssim(const Image& a, const Image& b, const fs::path& name,
                     std::vector<std::string>& notes) {
  if (std::min(a.width, a.height) < metrics::kMsSsimMinSide) {
    notes.push_back(name.filename().string() + ": smaller than " +
                    std::to_string(metrics::kMsSsimMinSide) + " pixels, MS-SSIM not reported");
    return kNaN;
  }
  return metrics::ms_ssim(a, b);
}

EvalResult finish(std::vector<EvalFile> files, std::vector<std::vector<std::string>> notes) {
  EvalResult result;
  result.files = std::move(files);
  std::vector<metrics::MetricsRow> rows;
  for (std::size_t i = 0; i < result.files.size(); ++i) {
    const auto& f = result.files[i];
    if (f.file.ok) {
      rows.push_back(f.row);
    } else {
      result.warnings.push_back(f.file.input.string() + ": " + f.file.error);
    }
    for (auto& n : notes[i]) result.warnings.push_back(std::move(n));
  }
  if (!rows.empty()) result.report = metrics::aggregate(std::move(rows));
  return result;
}

}  // namespace

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

bool EvalResult::all_ok() const {
  return std::all_of(files.begin(), files.end(), [](const EvalFile& f) { return f.file.ok; });
}

std::vector<FileResult> encode_files(const Codec& codec, const std::vector<fs::path>& images,
                                     const fs::path& out_dir, const BatchOptions& options) {
  fs::create_directories(out_dir);
  const auto dup = duplicate_stems(images);
  std::vector<FileResult> results(images.size());
  run_indexed(images.size(), options.jobs, [&](std::size_t i) {
    FileResult& r = results[i];
    r.input = images[i];
    guarded(r, dup[i], [&] {
      const Image img = read_image(images[i]);
      const double t0 = options.clock();
      const EncodeOutput enc = codec.encode(img);
      r.seconds = options.clock() - t0;
      r.output = out_dir / (images[i].stem().string() + ".icae");
      write_file(r.output, enc.stream);
      r.stream_bytes = enc.stream.size();
    });
  });
  return results;
}

std::vector<FileResult> decode_files(const Codec& codec, const std::vector<fs::path>& streams,
                                     const fs::path& out_dir, const BatchOptions& options) {
  fs::create_directories(out_dir);
  const auto dup = duplicate_stems(streams);
  std::vector<FileResult> results(streams.size());
  run_indexed(streams.size(), options.jobs, [&](std::size_t i) {
    FileResult& r = results[i];
    r.input = streams[i];
    guarded(r, dup[i], [&] {
      const auto bytes = read_file(streams[i]);
      r.stream_bytes = bytes.size();
      const entropy::StreamParts parts = entropy::unpack_stream(bytes);
      const double t0 = options.clock();
      const DecodeOutput dec = codec.decode(bytes);
      r.seconds = options.clock() - t0;
      check_complete(dec.image, static_cast<int>(parts.header.width),
                     static_cast<int>(parts.header.height));
      r.output = out_dir / (streams[i].stem().string() + ".png");
      write_png(r.output, dec.image);
    });
  });
  return results;
}

EvalResult evaluate_files(const Codec& codec, const std::vector<fs::path>& images,
                          const fs::path& out_dir, const BatchOptions& options) {
  fs::create_directories(out_dir);
  const auto dup = duplicate_stems(images);
  std::vector<EvalFile> files(images.size());
  std::vector<std::vector<std::string>> notes(images.size());
  run_indexed(images.size(), options.jobs, [&](std::size_t i) {
    EvalFile& f = files[i];
    f.file.input = images[i];
    f.row.name = images[i].stem().string();
    guarded(f.file, dup[i], [&] {
      const Image img = read_image(images[i]);
      double t0 = options.clock();
      const EncodeOutput enc = codec.encode(img);
      f.row.encode_s = options.clock() - t0;
      t0 = options.clock();
      const DecodeOutput dec = codec.decode(enc.stream);
      f.row.decode_s = options.clock() - t0;
      check_complete(dec.image, img.width, img.height);
      f.row.bpp = metrics::bpp(enc.stream.size(), img.height, img.width);
      f.row.psnr_db = metrics::psnr(img, dec.image);
      f.row.ms_ssim = score_ms_ssim(img, dec.image, images[i], notes[i]);
      f.file.seconds = f.row.encode_s + f.row.decode_s;
      f.file.stream_bytes = enc.stream.size();
      const std::string stem = images[i].stem().string();
      const auto png = encode_png(dec.image);
      const fs::path stream_path = out_dir / (stem + ".icae");
      write_file(stream_path, enc.stream);
      try {
        write_file(out_dir / (stem + ".png"), png);
      } catch (...) {
        std::error_code ec;
        fs::remove(stream_path, ec);
        throw;
      }
      f.file.output = out_dir / (stem + ".png");
    });
  });
  return finish(std::move(files), std::move(notes));
}

EvalResult evaluate_external(const std::vector<fs::path>& images, const fs::path& recon_dir,
                             const BatchOptions& options) {
  require(fs::is_directory(recon_dir), ErrorKind::kIo,
          "reconstruction directory not found: " + recon_dir.string());
  const std::vector<std::string> image_exts{".png", ".ppm"};
  std::vector<EvalFile> files(images.size());
  std::vector<std::vector<std::string>> notes(images.size());
  run_indexed(images.size(), options.jobs, [&](std::size_t i) {
    EvalFile& f = files[i];
    f.file.input = images[i];
    const std::string stem = images[i].stem().string();
    f.row.name = stem;
    f.row.encode_s = kNaN;
    f.row.decode_s = kNaN;
    guarded(f.file, false, [&] {
      const Image original = read_image(images[i]);
      const auto recon_path = find_with_stem(recon_dir, stem, image_exts, true);
      require(recon_path.has_value(), ErrorKind::kIo,
              "no reconstruction named " + stem + ".png or " + stem + ".ppm in " +
                  recon_dir.string());
      const Image recon = read_image(*recon_path);
      require(recon.width == original.width && recon.height == original.height,
              ErrorKind::kShapeMismatch,
              "reconstruction is " + std::to_string(recon.width) + "x" +
                  std::to_string(recon.height) + ", original is " +
                  std::to_string(original.width) + "x" + std::to_string(original.height));
      f.file.output = *recon_path;
      if (const auto stream = find_with_stem(recon_dir, stem, image_exts, false)) {
        f.file.stream_bytes = fs::file_size(*stream);
        f.row.bpp = metrics::bpp(f.file.stream_bytes, original.height, original.width);
      } else {
        f.row.bpp = kNaN;
        notes[i].push_back(stem + ": no compressed file found, bpp not reported");
      }
      f.row.psnr_db = metrics::psnr(original, recon);
      f.row.ms_ssim = score_ms_ssim(original, recon, images[i], notes[i]);
    });
  });
  return finish(std::move(files), std::move(notes));
}

std::string reference_footnote() {
  return "Reference (fully trained deepened model, 24 Kodak images): "
         "0.4242 bpp, 31.88 dB PSNR, 0.9677 MS-SSIM. Timings are hardware dependent.";
}

}  // namespace icae::app
