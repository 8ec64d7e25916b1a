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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "icae/codec.hpp"
#include "icae/metrics.hpp"

namespace icae::app {

// Monotonic seconds; must be thread-safe when jobs > 1.
using Clock = std::function<double()>;

double steady_seconds();

struct BatchOptions {
  int jobs = 1;
  Clock clock = steady_seconds;
};

struct FileResult {
  std::filesystem::path input;
  std::filesystem::path output;
  bool ok = false;
  std::string error;
  // Codec time only: excludes model load, file reads/writes and
  // image container parsing.
  double seconds = 0.0;
  std::uint64_t stream_bytes = 0;
};

// One `<stem>.icae` per input in `out_dir`.
std::vector<FileResult> encode_files(const Codec& codec,
                                     const std::vector<std::filesystem::path>& images,
                                     const std::filesystem::path& out_dir,
                                     const BatchOptions& options = {});

// One `<stem>.png` per stream in `out_dir`. Failed streams produce no file.
std::vector<FileResult> decode_files(const Codec& codec,
                                     const std::vector<std::filesystem::path>& streams,
                                     const std::filesystem::path& out_dir,
                                     const BatchOptions& options = {});

struct EvalFile {
  FileResult file;
  metrics::MetricsRow row;
};

struct EvalResult {
  std::vector<EvalFile> files;
  // Aggregated over successful files; empty rows when none succeeded.
  metrics::MetricsReport report;
  std::vector<std::string> warnings;

  bool all_ok() const;
};

// Encodes and decodes every image, writing `<stem>.icae` and `<stem>.png`
// to `out_dir`, and scores the reconstruction against the original.
EvalResult evaluate_files(const Codec& codec,
                          const std::vector<std::filesystem::path>& images,
                          const std::filesystem::path& out_dir,
                          const BatchOptions& options = {});

// Scores reconstructions made by another codec. For each original the
// reconstruction is `<recon_dir>/<stem>.png` (or .ppm); any other file with
// the same stem is taken as the compressed stream for bpp, otherwise bpp
// is NaN. Timings are NaN.
EvalResult evaluate_external(const std::vector<std::filesystem::path>& images,
                             const std::filesystem::path& recon_dir,
                             const BatchOptions& options = {});

// Reference operating point for a fully trained deepened model.
std::string reference_footnote();

}  // namespace icae::app
