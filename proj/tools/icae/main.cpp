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

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "icae/codec.hpp"
#include "icae/error.hpp"
#include "icae/file_io.hpp"
#include "icae/model.hpp"
#include "icae/pipeline.hpp"
#include "icae/trainer.hpp"

namespace fs = std::filesystem;
using namespace icae;

namespace {

struct Common {
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string csv;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Codec load_codec(const fs::path& model) {
  return Codec(nn::load_checkpoint(model));
}

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", s);
  return buf;
}

int report_files(const std::vector<app::FileResult>& results, const char* verb,
                 const std::string& csv_path) {
  int failed = 0;
  double total = 0;
  int ok = 0;
  std::ostringstream csv;
  csv << "input,status,output,stream_bytes,seconds,error\n";
  for (const auto& r : results) {
    if (r.ok) {
      ++ok;
      total += r.seconds;
      std::cout << r.input.string() << " -> " << r.output.string() << "  " << r.stream_bytes
                << " bytes  " << verb << ' ' << format_seconds(r.seconds) << " s\n";
    } else {
      ++failed;
      std::cerr << "error: " << r.input.string() << ": " << r.error << '\n';
    }
    csv << r.input.string() << ',' << (r.ok ? "ok" : "failed") << ',' << r.output.string()
        << ',' << r.stream_bytes << ',' << (r.ok ? format_seconds(r.seconds) : "") << ",\""
        << r.error << "\"\n";
  }
  if (ok > 0) {
    std::cout << "mean " << verb << " time over " << ok << " file(s): "
              << format_seconds(total / ok) << " s\n";
  }
  if (failed > 0) std::cerr << failed << " of " << results.size() << " file(s) failed\n";
  if (!csv_path.empty()) write_text(csv_path, csv.str());
  return failed == 0 ? 0 : 1;
}

int run_train(const fs::path& config_path, const Common& common) {
  train::TrainConfig config = train::load_config(config_path);
  if (common.seed) config.seed = *common.seed;
  std::cout << "training " << config.iterations << " iterations, output "
            << config.output_dir.string() << '\n';
  const auto result = train::run_training(config, [](const train::CurveRecord& r) {
    std::cout << "iter " << r.iteration << "  loss " << r.loss << "  bpp " << r.bpp_proxy
              << "  mse " << r.mse_255 << '\n';
  });
  if (!common.csv.empty()) write_text(common.csv, result.log.to_csv());
  std::cout << "wrote " << (config.output_dir / "model.ckpt").string() << '\n';
  return 0;
}

int run_eval(const std::optional<fs::path>& model, const fs::path& out,
             const std::optional<fs::path>& external, const std::vector<fs::path>& images,
             const Common& common) {
  app::BatchOptions opts;
  opts.jobs = common.jobs;
  app::EvalResult result;
  if (external) {
    result = app::evaluate_external(images, *external, opts);
  } else {
    if (!model || out.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "eval needs --model and --out unless --external is given");
    }
    const Codec codec = load_codec(*model);
    result = app::evaluate_files(codec, images, out, opts);
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  if (!result.report.rows.empty()) {
    std::cout << metrics::to_table(result.report, app::reference_footnote());
    const std::string csv = metrics::to_csv(result.report);
    if (!common.csv.empty()) {
      write_text(common.csv, csv);
    } else if (!external) {
      write_text(out / "metrics.csv", csv);
    }
  }
  return result.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned image codec with a scale hyperprior"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--jobs", common.jobs, "Images processed concurrently")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", common.seed, "Training seed (overrides the config)");
  app.add_option("--csv", common.csv, "Also write results as CSV to this path");

  fs::path config_path;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a key=value config");
  train_cmd->add_option("--config", config_path, "Config file")->required();

  fs::path model;
  fs::path out;
  std::vector<fs::path> inputs;
  auto* encode_cmd = app.add_subcommand("encode", "Compress images to .icae streams");
  encode_cmd->add_option("--model", model, "Checkpoint")->required();
  encode_cmd->add_option("--out", out, "Output directory")->required();
  encode_cmd->add_option("images", inputs, "PNG or PPM images")->required();

  auto* decode_cmd = app.add_subcommand("decode", "Reconstruct PNG images from streams");
  decode_cmd->add_option("--model", model, "Checkpoint")->required();
  decode_cmd->add_option("--out", out, "Output directory")->required();
  decode_cmd->add_option("streams", inputs, ".icae streams")->required();

  std::optional<fs::path> eval_model;
  std::optional<fs::path> external;
  auto* eval_cmd = app.add_subcommand("eval", "Encode, decode and score images");
  eval_cmd->add_option("--model", eval_model, "Checkpoint");
  eval_cmd->add_option("--out", out, "Output directory for streams, reconstructions and metrics.csv");
  eval_cmd->add_option("--external", external,
                       "Score reconstructions from another codec found in this directory");
  eval_cmd->add_option("images", inputs, "Original images")->required();

  for (auto* sub : {train_cmd, encode_cmd, decode_cmd, eval_cmd}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    app::BatchOptions opts;
    opts.jobs = common.jobs;
    if (*train_cmd) return run_train(config_path, common);
    if (*encode_cmd) {
      const Codec codec = load_codec(model);
      return report_files(app::encode_files(codec, inputs, out, opts), "encode", common.csv);
    }
    if (*decode_cmd) {
      const Codec codec = load_codec(model);
      return report_files(app::decode_files(codec, inputs, out, opts), "decode", common.csv);
    }
    if (*eval_cmd) return run_eval(eval_model, out, external, inputs, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
