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

#include "icae/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <sstream>

#include "icae/autodiff.hpp"
#include "icae/error.hpp"
#include "icae/file_io.hpp"
#include "icae/ops.hpp"
#include "icae/quantize.hpp"

namespace icae::train {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  require(ec == std::errc() && ptr == end, ErrorKind::kConfig,
          "config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(ErrorKind::kConfig, "config key '" + key + "': expected true or false, got '" +
                               value + "'");
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Tensor stack_batch(const std::vector<Tensor>& patches) {
  const Shape& s = patches.front().shape();
  Tensor out(Shape{static_cast<std::int64_t>(patches.size()), s.c, s.h, s.w});
  auto dst = out.data().begin();
  for (const auto& p : patches) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

std::string norm_dump(const nn::HyperpriorModel& model) {
  std::ostringstream out;
  const auto params = model.parameters();
  const auto names = model.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    double sq = 0;
    for (const Real v : params[i].value().data()) sq += static_cast<double>(v) * v;
    out << "\n  " << names[i] << " norm=" << std::sqrt(sq);
  }
  return out.str();
}

}  // namespace

void TrainConfig::validate() const {
  require(lambda > 0 && std::isfinite(lambda), ErrorKind::kConfig, "lambda must be positive");
  require(learning_rate > 0 && std::isfinite(learning_rate), ErrorKind::kConfig,
          "learning_rate must be positive");
  require(batch_size > 0, ErrorKind::kConfig, "batch_size must be positive");
  require(patch_size > 0 && patch_size % 64 == 0, ErrorKind::kConfig,
          "patch_size must be a positive multiple of 64");
  require(iterations >= 0, ErrorKind::kConfig, "iterations must be non-negative");
  require(log_interval > 0, ErrorKind::kConfig, "log_interval must be positive");
  require(checkpoint_interval >= 0, ErrorKind::kConfig,
          "checkpoint_interval must be non-negative");
  arch.validate();
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig cfg;
  std::vector<std::string> unknown;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, ErrorKind::kConfig,
            "config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "lambda") cfg.lambda = parse_number<double>(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
    else if (key == "patch_size") cfg.patch_size = parse_number<int>(key, value);
    else if (key == "iterations") cfg.iterations = parse_number<std::int64_t>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "variant") cfg.arch.variant = nn::parse_variant(value);
    else if (key == "n_channels") cfg.arch.n_channels = parse_number<int>(key, value);
    else if (key == "m_channels") cfg.arch.m_channels = parse_number<int>(key, value);
    else if (key == "deepen_hyper") cfg.arch.deepen_hyper = parse_bool(key, value);
    else if (key == "log_interval") cfg.log_interval = parse_number<std::int64_t>(key, value);
    else if (key == "checkpoint_interval")
      cfg.checkpoint_interval = parse_number<std::int64_t>(key, value);
    else if (key == "dataset") cfg.dataset = value;
    else if (key == "output_dir") cfg.output_dir = value;
    else unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    fail(ErrorKind::kConfig, "unknown config keys: " + list);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                       bytes.size()));
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "lambda=" << c.lambda << "\nlearning_rate=" << c.learning_rate
      << "\nbatch_size=" << c.batch_size << "\npatch_size=" << c.patch_size
      << "\niterations=" << c.iterations << "\nseed=" << c.seed
      << "\nvariant=" << nn::variant_name(c.arch.variant)
      << "\nn_channels=" << c.arch.n_channels << "\nm_channels=" << c.arch.m_channels
      << "\ndeepen_hyper=" << (c.arch.deepen_hyper ? "true" : "false")
      << "\nlog_interval=" << c.log_interval
      << "\ncheckpoint_interval=" << c.checkpoint_interval
      << "\ndataset=" << c.dataset.string() << "\noutput_dir=" << c.output_dir.string()
      << '\n';
  return out.str();
}

Dataset dataset_from_images(const std::vector<Image>& images, int min_side) {
  Dataset d;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    const std::string name = "image" + std::to_string(i);
    if (std::min(img.width, img.height) < min_side) {
      d.warnings.push_back(name + ": smaller than " + std::to_string(min_side) + " pixels");
      ++d.skipped;
      continue;
    }
    d.images.push_back(image_to_tensor(img, true));
    d.names.push_back(name);
  }
  require(!d.images.empty(), ErrorKind::kConfig, "no usable training images");
  return d;
}

Dataset ingest_dataset(const std::filesystem::path& dir, int min_side) {
  require(std::filesystem::is_directory(dir), ErrorKind::kIo,
          "dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Dataset d;
  for (const auto& f : files) {
    try {
      const Image img = read_image(f);
      if (std::min(img.width, img.height) < min_side) {
        d.warnings.push_back(f.filename().string() + ": smaller than " +
                             std::to_string(min_side) + " pixels");
        ++d.skipped;
        continue;
      }
      d.images.push_back(image_to_tensor(img, true));
      d.names.push_back(f.filename().string());
    } catch (const Error& e) {
      d.warnings.push_back(f.filename().string() + ": " + e.what());
      ++d.skipped;
    }
  }
  require(!d.images.empty(), ErrorKind::kConfig,
          "no usable training images in " + dir.string() + " (" + std::to_string(d.skipped) +
              " skipped)");
  return d;
}

Patch sample_patch(const Tensor& image, int size, Rng& rng) {
  const Shape& s = image.shape();
  require(s.n == 1 && s.h >= size && s.w >= size, ErrorKind::kInvalidArgument,
          "sample_patch: image " + s.str() + " smaller than the patch");
  Patch p;
  p.y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(s.h - size + 1)));
  p.x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(s.w - size + 1)));
  p.pixels = Tensor(Shape{1, s.c, size, size});
  for (std::int64_t c = 0; c < s.c; ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) p.pixels.at(0, c, y, x) = image.at(0, c, p.y + y, p.x + x);
    }
  }
  return p;
}

RdLoss rd_loss(const Var& x, const Var& x_hat, const Var& y_probs, const Var& z_probs,
               double lambda, double num_pixels) {
  require(num_pixels > 0, ErrorKind::kInvalidArgument, "rd_loss: num_pixels must be positive");
  const Var rate = scale(add(bits(y_probs), bits(z_probs)), 1.0 / num_pixels);
  const Var distortion = scale(mean_squared_error(x_hat, x), 255.0 * 255.0);
  RdLoss out;
  out.loss = add(rate, scale(distortion, lambda));
  out.bpp = rate.value().item();
  out.mse_255 = distortion.value().item();
  return out;
}

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    require(p.is_leaf() && p.requires_grad(), ErrorKind::kInvalidArgument,
            "Adam: parameters must be trainable leaves");
    m_.emplace_back(static_cast<std::size_t>(p.value().numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p.value().numel()), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i];
    if (!p.has_grad()) continue;
    const Tensor& g = p.grad();
    Tensor& w = p.mutable_value();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::int64_t k = 0; k < w.numel(); ++k) {
      const double gk = g[k];
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
      const double mh = m[k] / c1;
      const double vh = v[k] / c2;
      w[k] = static_cast<Real>(w[k] - lr_ * mh / (std::sqrt(vh) + eps_));
    }
  }
}

void CurveLog::append(const CurveRecord& r) {
  require(records_.empty() || r.iteration > records_.back().iteration,
          ErrorKind::kInvalidArgument, "curve log iterations must increase");
  records_.push_back(r);
}

std::string CurveLog::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "iteration,bpp_proxy,mse_255,loss\n";
  for (const auto& r : records_) {
    out << r.iteration << ',' << r.bpp_proxy << ',' << r.mse_255 << ',' << r.loss << '\n';
  }
  return out.str();
}

TrainResult train(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks) {
  config.validate();
  require(!data.images.empty(), ErrorKind::kConfig, "empty training set");
  for (const auto& img : data.images) {
    require(img.shape().h >= config.patch_size && img.shape().w >= config.patch_size,
            ErrorKind::kConfig, "training image smaller than patch_size");
  }
  Rng seeds(config.seed);
  TrainResult result;
  result.model = nn::HyperpriorModel::create(config.arch, config.lambda, seeds.next_u64());
  Rng data_rng(seeds.next_u64());
  Rng noise_rng(seeds.next_u64());
  Adam adam(result.model.parameters(), config.learning_rate);
  const double pixels =
      static_cast<double>(config.batch_size) * config.patch_size * config.patch_size;

  CurveRecord acc;
  std::int64_t acc_count = 0;
  for (std::int64_t it = 1; it <= config.iterations; ++it) {
    std::vector<Tensor> patches;
    for (int b = 0; b < config.batch_size; ++b) {
      const auto idx = data_rng.uniform_int(data.images.size());
      patches.push_back(sample_patch(data.images[idx], config.patch_size, data_rng).pixels);
    }
    const Var x(stack_batch(patches));
    const auto rounds_before = entropy::quantize_counts().round;
    RdLoss loss;
    try {
      const nn::TrainForward f = result.model.forward_train(x, noise_rng);
      loss = rd_loss(x, f.x_hat, f.y_probs, f.z_probs, config.lambda, pixels);
      require(std::isfinite(loss.loss.value().item()), ErrorKind::kNonFinite,
              "loss is not finite");
      adam.zero_grad();
      backward(loss.loss);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNonFinite && e.kind() != ErrorKind::kInvalidArgument) throw;
      fail(ErrorKind::kNonFinite, "training halted at iteration " + std::to_string(it) +
                                      ": " + e.what() + "\nparameter norms:" +
                                      norm_dump(result.model));
    }
    require(entropy::quantize_counts().round == rounds_before, ErrorKind::kAutodiff,
            "mode discipline violated: hard rounding during training");
    adam.step();

    acc.bpp_proxy += loss.bpp;
    acc.mse_255 += loss.mse_255;
    acc.loss += loss.loss.value().item();
    ++acc_count;
    if (it == 1 || it % config.log_interval == 0 || it == config.iterations) {
      CurveRecord r{it, acc.bpp_proxy / acc_count, acc.mse_255 / acc_count,
                    acc.loss / acc_count};
      result.log.append(r);
      if (hooks.on_record) hooks.on_record(r);
      acc = CurveRecord{};
      acc_count = 0;
    }
    if (config.checkpoint_interval > 0 && it % config.checkpoint_interval == 0 &&
        hooks.on_checkpoint) {
      hooks.on_checkpoint(it, result.model);
    }
  }
  return result;
}

TrainResult run_training(const TrainConfig& config,
                         const std::function<void(const CurveRecord&)>& on_record) {
  config.validate();
  require(!config.dataset.empty(), ErrorKind::kConfig, "config does not set dataset");
  require(std::filesystem::is_directory(config.dataset), ErrorKind::kIo,
          "dataset directory not found: " + config.dataset.string());
  const auto start = std::chrono::system_clock::now();
  const Dataset data = ingest_dataset(config.dataset, config.patch_size);
  std::filesystem::create_directories(config.output_dir);
  TrainHooks hooks;
  hooks.on_record = on_record;
  hooks.on_checkpoint = [&](std::int64_t it, const nn::HyperpriorModel& m) {
    write_file(config.output_dir / ("checkpoint_" + std::to_string(it) + ".ckpt"),
               nn::serialize_checkpoint(m));
  };
  TrainResult result = train(config, data, hooks);
  const auto end = std::chrono::system_clock::now();
  write_file(config.output_dir / "model.ckpt", nn::serialize_checkpoint(result.model));
  const std::string csv = result.log.to_csv();
  write_file(config.output_dir / "curve.csv",
             std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
  std::ostringstream manifest;
  manifest << "seed=" << config.seed << "\nstart=" << iso_time(start)
           << "\nend=" << iso_time(end) << "\nimages=" << data.images.size()
           << "\nskipped=" << data.skipped << "\n# config\n"
           << format_config(config);
  for (const auto& w : data.warnings) manifest << "# warning: " << w << '\n';
  const std::string m = manifest.str();
  write_file(config.output_dir / "manifest.txt",
             std::span(reinterpret_cast<const std::uint8_t*>(m.data()), m.size()));
  return result;
}

}  // namespace icae::train
