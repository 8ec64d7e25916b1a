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
#include <string>
#include <string_view>
#include <vector>

#include "icae/image.hpp"
#include "icae/model.hpp"

namespace icae::train {

struct TrainConfig {
  double lambda = nn::kDefaultLambda;
  double learning_rate = 1e-4;
  int batch_size = 8;
  int patch_size = 256;
  std::int64_t iterations = 1000;
  std::uint64_t seed = 0;
  nn::ArchConfig arch;
  std::int64_t log_interval = 100;
  // 0 writes a checkpoint only at the end.
  std::int64_t checkpoint_interval = 0;
  std::filesystem::path dataset;
  std::filesystem::path output_dir = "train_out";

  void validate() const;
};

// Flat `key=value` lines; blank lines and lines starting with '#' are
// ignored. Keys: lambda, learning_rate, batch_size, patch_size, iterations,
// seed, variant, n_channels, m_channels, deepen_hyper, log_interval,
// checkpoint_interval, dataset, output_dir. Unknown keys fail with a list of
// every offending key.
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);
// Round-trippable echo of every key.
std::string format_config(const TrainConfig& config);

// Linear-RGB training images, (1, 3, H, W) in [0, 1].
struct Dataset {
  std::vector<Tensor> images;
  std::vector<std::string> names;
  std::vector<std::string> warnings;
  int skipped = 0;
};

// Loads every regular file of `dir` in name order. Unreadable files, files
// with an alpha channel and images smaller than min_side are skipped with a
// warning; an empty result is an error.
Dataset ingest_dataset(const std::filesystem::path& dir, int min_side);
Dataset dataset_from_images(const std::vector<Image>& images, int min_side);

struct Patch {
  Tensor pixels;  // (1, 3, size, size)
  int x = 0;
  int y = 0;
};

// Uniformly placed square crop.
Patch sample_patch(const Tensor& image, int size, Rng& rng);

struct RdLoss {
  Var loss;
  double bpp = 0;      // rate term in bits per pixel
  double mse_255 = 0;  // distortion term, 255^2 * MSE
};

// loss = (bits(y_probs) + bits(z_probs)) / num_pixels + lambda * 255^2 * MSE.
RdLoss rd_loss(const Var& x, const Var& x_hat, const Var& y_probs, const Var& z_probs,
               double lambda, double num_pixels);

// Adaptive-moment optimizer with bias correction.
class Adam {
 public:
  Adam(std::vector<Var> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void zero_grad();
  void step();
  std::int64_t steps() const { return t_; }

 private:
  std::vector<Var> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
};

struct CurveRecord {
  std::int64_t iteration = 0;
  double bpp_proxy = 0;
  double mse_255 = 0;
  double loss = 0;
};

class CurveLog {
 public:
  // Iterations must be strictly increasing.
  void append(const CurveRecord& record);
  const std::vector<CurveRecord>& records() const { return records_; }
  // `iteration,bpp_proxy,mse_255,loss`
  std::string to_csv() const;

 private:
  std::vector<CurveRecord> records_;
};

struct TrainHooks {
  // Called after iterations that are multiples of checkpoint_interval.
  std::function<void(std::int64_t, const nn::HyperpriorModel&)> on_checkpoint;
  std::function<void(const CurveRecord&)> on_record;
};

struct TrainResult {
  nn::HyperpriorModel model;
  CurveLog log;
};

// Records are written at iteration 1 (the loss of the initial model) and
// every log_interval iterations as the mean over the iterations since the
// previous record. A non-finite loss stops training with the iteration
// number and the norm of every parameter tensor.
TrainResult train(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks = {});

// Full run: ingests config.dataset, trains, and writes model.ckpt,
// checkpoint_<iteration>.ckpt at intervals, curve.csv and manifest.txt
// into config.output_dir. `on_record` sees every curve record as it is made.
TrainResult run_training(const TrainConfig& config,
                         const std::function<void(const CurveRecord&)>& on_record = {});

}  // namespace icae::train
