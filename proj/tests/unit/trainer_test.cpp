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

#include <cmath>
#include <filesystem>
#include <limits>

#include "icae/error.hpp"
#include "icae/file_io.hpp"
#include "icae/grad_check.hpp"
#include "icae/ops.hpp"
#include "icae/quantize.hpp"
#include "icae/trainer.hpp"
#include "synthetic.hpp"

#include <png.h>

namespace icae::train {
namespace {

using testing::synthetic_image;

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("icae_trainer_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.arch.n_channels = 4;
  c.arch.m_channels = 4;
  c.patch_size = 64;
  c.batch_size = 2;
  c.iterations = 6;
  c.log_interval = 2;
  c.seed = 42;
  return c;
}

Dataset tiny_dataset() {
  std::vector<Image> imgs;
  for (int i = 0; i < 3; ++i) imgs.push_back(synthetic_image(80, 72, 10 + i));
  return dataset_from_images(imgs, 64);
}

TEST(Config, ParsesEveryKey) {
  const TrainConfig c = parse_config(
      "# toy run\nlambda = 0.02\nlearning_rate=0.001\nbatch_size=4\npatch_size=128\n"
      "iterations=77\nseed=9\nvariant=deepened\nn_channels=16\nm_channels=24\n"
      "deepen_hyper=true\nlog_interval=7\ncheckpoint_interval=11\ndataset=/data/x\n"
      "output_dir=out\n\n");
  EXPECT_EQ(c.lambda, 0.02);
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.batch_size, 4);
  EXPECT_EQ(c.patch_size, 128);
  EXPECT_EQ(c.iterations, 77);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.arch.variant, nn::Variant::kDeepened);
  EXPECT_EQ(c.arch.n_channels, 16);
  EXPECT_EQ(c.arch.m_channels, 24);
  EXPECT_TRUE(c.arch.deepen_hyper);
  EXPECT_EQ(c.log_interval, 7);
  EXPECT_EQ(c.checkpoint_interval, 11);
  EXPECT_EQ(c.dataset, "/data/x");
  EXPECT_EQ(c.output_dir, "out");
  const TrainConfig back = parse_config(format_config(c));
  EXPECT_EQ(format_config(back), format_config(c));
}

TEST(Config, DefaultsMatchReferenceSetup) {
  const TrainConfig c = parse_config("");
  EXPECT_EQ(c.lambda, 0.01);
  EXPECT_EQ(c.learning_rate, 1e-4);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_EQ(c.patch_size, 256);
  EXPECT_EQ(c.arch.n_channels, 192);
  EXPECT_EQ(c.arch.m_channels, 192);
}

TEST(Config, UnknownKeysAreListed) {
  try {
    parse_config("lambda=0.01\nlr=3\nepochs=2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("lr"), std::string::npos);
    EXPECT_NE(msg.find("epochs"), std::string::npos);
  }
}

TEST(Config, InvalidValuesFail) {
  EXPECT_THROW(parse_config("patch_size=100\n"), Error);
  EXPECT_THROW(parse_config("lambda=-1\n"), Error);
  EXPECT_THROW(parse_config("iterations=ten\n"), Error);
  EXPECT_THROW(parse_config("variant=wide\n"), Error);
  EXPECT_THROW(parse_config("no equals sign\n"), Error);
}

void write_rgba_png(const std::filesystem::path& p) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = 70;
  img.height = 70;
  img.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> px(70 * 70 * 4, 128);
  ASSERT_TRUE(png_image_write_to_file(&img, p.c_str(), 0, px.data(), 0, nullptr));
}

TEST(Ingest, LinearizesAndSkipsBadFiles) {
  const auto dir = scratch("ingest");
  Image flat(64, 64, 188);
  write_png(dir / "a.png", flat);
  write_png(dir / "b.png", synthetic_image(100, 90, 1));
  write_png(dir / "small.png", synthetic_image(40, 40, 2));
  write_rgba_png(dir / "alpha.png");
  const std::vector<std::uint8_t> junk{'n', 'o', 'p', 'e'};
  write_file(dir / "junk.png", junk);
  const Dataset d = ingest_dataset(dir, 64);
  ASSERT_EQ(d.images.size(), 2u);
  EXPECT_EQ(d.names[0], "a.png");
  EXPECT_EQ(d.skipped, 3);
  EXPECT_NEAR(d.images[0][0], 0.5029, 5e-5);
  bool alpha_named = false;
  for (const auto& w : d.warnings) {
    if (w.find("alpha.png") != std::string::npos &&
        w.find("alpha channel unsupported") != std::string::npos) {
      alpha_named = true;
    }
  }
  EXPECT_TRUE(alpha_named);
  for (const auto& t : d.images) {
    for (const Real v : t.data()) {
      EXPECT_GE(v, 0);
      EXPECT_LE(v, 1);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Ingest, EndpointsAndEmptySetFail) {
  const Dataset d = dataset_from_images({Image(64, 64, 0), Image(64, 64, 255)}, 64);
  EXPECT_EQ(d.images[0][5], 0.0);
  EXPECT_NEAR(d.images[1][5], 1.0, 1e-15);
  const auto dir = scratch("empty");
  EXPECT_THROW(ingest_dataset(dir, 64), Error);
  EXPECT_THROW(ingest_dataset(dir / "missing", 64), Error);
  std::filesystem::remove_all(dir);
}

TEST(SamplePatch, ExactSizeGivesWholeImage) {
  Rng rng(1);
  const Tensor img = image_to_tensor(synthetic_image(64, 64, 3), true);
  const Patch p = sample_patch(img, 64, rng);
  EXPECT_EQ(p.x, 0);
  EXPECT_EQ(p.y, 0);
  EXPECT_TRUE(std::equal(p.pixels.data().begin(), p.pixels.data().end(), img.data().begin()));
}

TEST(SamplePatch, ReproducibleUnderSeed) {
  const Tensor img(Shape{1, 3, 512, 512});
  Rng a(77);
  Rng b(77);
  for (int i = 0; i < 5; ++i) {
    const Patch pa = sample_patch(img, 256, a);
    const Patch pb = sample_patch(img, 256, b);
    EXPECT_EQ(pa.x, pb.x);
    EXPECT_EQ(pa.y, pb.y);
  }
}

TEST(SamplePatch, CornersAreUniform) {
  const Tensor img(Shape{1, 1, 80, 80});
  Rng rng(5);
  std::vector<int> xs(17, 0);
  std::vector<int> ys(17, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Patch p = sample_patch(img, 64, rng);
    ++xs[p.x];
    ++ys[p.y];
  }
  auto chi2 = [&](const std::vector<int>& h) {
    const double e = draws / 17.0;
    double s = 0;
    for (const int c : h) s += (c - e) * (c - e) / e;
    return s;
  };
  // 16 degrees of freedom; 39.25 is the 0.999 quantile.
  EXPECT_LT(chi2(xs), 39.25);
  EXPECT_LT(chi2(ys), 39.25);
}

TEST(RdLoss, ZeroWhenPerfect) {
  const Var x(Tensor(Shape{1, 3, 4, 4}, 0.3), true);
  const Var probs(Tensor(Shape{1, 2, 2, 2}, 1.0));
  const RdLoss l = rd_loss(x, x, probs, probs, 0.01, 16);
  EXPECT_EQ(l.loss.value().item(), 0.0);
}

TEST(RdLoss, DistortionTermClosedForm) {
  const Var x(Tensor(Shape{1, 3, 8, 8}, 0.5));
  const Var x_hat(Tensor(Shape{1, 3, 8, 8}, 0.5 + 1.0 / 255.0));
  const Var probs(Tensor(Shape{1, 1, 1, 1}, 1.0));
  const RdLoss l = rd_loss(x, x_hat, probs, probs, 0.01, 64);
  EXPECT_NEAR(l.mse_255, 1.0, 1e-9);
  EXPECT_NEAR(l.loss.value().item(), 0.01, 1e-11);
}

TEST(RdLoss, RateTermClosedForm) {
  const Var x(Tensor(Shape{1, 3, 2, 2}, 0.1));
  const Var y_probs(Tensor(Shape{1, 96, 64, 64}, 0.5));
  const Var none(Tensor(Shape{1, 1, 1, 1}, 1.0));
  const RdLoss l = rd_loss(x, x, y_probs, none, 0.01, 256.0 * 256.0);
  EXPECT_NEAR(l.bpp, 393216.0 / 65536.0, 1e-12);
  EXPECT_NEAR(l.loss.value().item(), 6.0, 1e-12);
  const Var zero(Tensor(Shape{1, 1, 1, 1}, 0.0));
  EXPECT_THROW(rd_loss(x, x, zero, none, 0.01, 4), Error);
}

TEST(RdLoss, GradientMatchesFiniteDifferencesForEveryGroup) {
  nn::ArchConfig a;
  a.n_channels = 3;
  a.m_channels = 4;
  const auto model = nn::HyperpriorModel::create(a, 0.01, 3);
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  Rng rng(4);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (names[i].find("gamma_raw") == std::string::npos) continue;
    Var p = params[i];
    for (auto& v : p.mutable_value().data()) v = 0.05 + 0.3 * rng.uniform_double();
  }
  const Var x(image_to_tensor(synthetic_image(64, 64, 8), true));
  auto f = [&] {
    Rng noise(99);
    const auto out = model.forward_train(x, noise);
    return rd_loss(x, out.x_hat, out.y_probs, out.z_probs, 0.01, 64 * 64).loss;
  };
  Adam adam(params, 1e-3);
  for (int s = 0; s < 10; ++s) {
    adam.zero_grad();
    backward(f());
    adam.step();
  }
  GradCheckOptions opts;
  opts.max_samples = 12;
  opts.kink_tolerance = 1e-4;
  std::int64_t checked = 0;
  std::int64_t skipped = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    opts.seed = i;
    const auto r = grad_check(f, {params[i]}, opts);
    EXPECT_LT(r.max_relative_error, 1e-3) << names[i];
    EXPECT_GT(r.checked, 0) << names[i];
    checked += r.checked;
    skipped += r.skipped;
  }
  EXPECT_LT(skipped * 4, checked + skipped);
}

TEST(GradCheck, KinkToleranceSkipsStraddledRelu) {
  Var w(Tensor(Shape{1, 1, 1, 2}, std::vector<Real>{2e-4, 0.5}), true);
  auto f = [&] { return sum(relu(w)); };
  GradCheckOptions opts;
  const auto plain = grad_check(f, {w}, opts);
  EXPECT_GT(plain.max_relative_error, 0.1);
  opts.kink_tolerance = 1e-4;
  const auto r = grad_check(f, {w}, opts);
  EXPECT_EQ(r.skipped, 1);
  EXPECT_EQ(r.checked, 1);
  EXPECT_LT(r.max_relative_error, 1e-9);
}

TEST(Adam, MinimizesQuadratic) {
  Var w(Tensor(Shape{1, 1, 1, 3}, std::vector<Real>{3, -2, 0.5}), true);
  const Tensor target(Shape{1, 1, 1, 3}, std::vector<Real>{1, 1, 1});
  Adam opt({w}, 0.05);
  for (int i = 0; i < 2000; ++i) {
    opt.zero_grad();
    backward(sum(square(sub(w, Var(target)))));
    opt.step();
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(w.value()[i], 1.0, 1e-3);
  EXPECT_EQ(opt.steps(), 2000);
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
  Var w(Tensor(Shape{1, 1, 1, 2}, std::vector<Real>{1, -1}), true);
  Adam opt({w}, 1e-4);
  backward(sum(scale(w, 123.0)));
  opt.step();
  EXPECT_NEAR(w.value()[0], 1 - 1e-4, 1e-9);
  EXPECT_NEAR(w.value()[1], -1 - 1e-4, 1e-9);
}

TEST(CurveLog, StrictlyIncreasingAndCsv) {
  CurveLog log;
  log.append({1, 0.5, 20, 0.7});
  log.append({10, 0.4, 10, 0.5});
  EXPECT_THROW(log.append({10, 0, 0, 0}), Error);
  const std::string csv = log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,bpp_proxy,mse_255,loss");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Train, ZeroIterationsKeepsInitialization) {
  TrainConfig c = tiny_config();
  c.iterations = 0;
  const TrainResult r = train(c, tiny_dataset());
  Rng seeds(c.seed);
  const auto init = nn::HyperpriorModel::create(c.arch, c.lambda, seeds.next_u64());
  EXPECT_EQ(nn::serialize_checkpoint(r.model), nn::serialize_checkpoint(init));
  EXPECT_TRUE(r.log.records().empty());
}

TEST(Train, SeededRunsAreBitIdentical) {
  const Dataset d = tiny_dataset();
  const TrainResult a = train(tiny_config(), d);
  const TrainResult b = train(tiny_config(), d);
  EXPECT_EQ(nn::serialize_checkpoint(a.model), nn::serialize_checkpoint(b.model));
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  TrainConfig other = tiny_config();
  other.seed = 43;
  EXPECT_NE(nn::serialize_checkpoint(train(other, d).model), nn::serialize_checkpoint(a.model));
  ASSERT_EQ(a.log.records().size(), 4u);
  EXPECT_EQ(a.log.records()[0].iteration, 1);
  EXPECT_EQ(a.log.records()[3].iteration, 6);
}

TEST(Train, UsesNoiseNeverRounding) {
  const auto before = entropy::quantize_counts();
  train(tiny_config(), tiny_dataset());
  const auto after = entropy::quantize_counts();
  EXPECT_EQ(after.round, before.round);
  EXPECT_EQ(after.noise - before.noise, 2 * tiny_config().iterations);
}

TEST(Train, CheckpointHookFiresAtIntervals) {
  TrainConfig c = tiny_config();
  c.checkpoint_interval = 2;
  std::vector<std::int64_t> seen;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](std::int64_t it, const nn::HyperpriorModel&) { seen.push_back(it); };
  train(c, tiny_dataset(), hooks);
  EXPECT_EQ(seen, (std::vector<std::int64_t>{2, 4, 6}));
}

TEST(Train, NonFiniteLossHaltsWithNorms) {
  Dataset d = tiny_dataset();
  d.images[0].fill(std::numeric_limits<Real>::quiet_NaN());
  d.images.resize(1);
  try {
    train(tiny_config(), d);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_EQ(e.kind(), ErrorKind::kNonFinite);
    EXPECT_NE(msg.find("iteration 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("g_a.0.weight norm="), std::string::npos) << msg;
    EXPECT_NE(msg.find("prior.log_scale norm="), std::string::npos) << msg;
  }
}

TEST(RunTraining, MissingDatasetFailsEarly) {
  TrainConfig c = tiny_config();
  c.dataset = "/nonexistent/icae/dataset";
  c.output_dir = scratch("missing") / "out";
  try {
    run_training(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
  EXPECT_FALSE(std::filesystem::exists(c.output_dir));
}

TEST(RunTraining, WritesArtifacts) {
  const auto root = scratch("run");
  std::filesystem::create_directories(root / "data");
  for (int i = 0; i < 3; ++i) {
    write_png(root / "data" / ("img" + std::to_string(i) + ".png"), synthetic_image(70, 66, i));
  }
  TrainConfig c = tiny_config();
  c.dataset = root / "data";
  c.output_dir = root / "out";
  c.checkpoint_interval = 3;
  const TrainResult r = run_training(c);
  EXPECT_TRUE(std::filesystem::exists(c.output_dir / "model.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(c.output_dir / "checkpoint_3.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(c.output_dir / "checkpoint_6.ckpt"));
  const auto csv = read_file(c.output_dir / "curve.csv");
  EXPECT_EQ(std::string(csv.begin(), csv.end()), r.log.to_csv());
  const auto manifest = read_file(c.output_dir / "manifest.txt");
  const std::string m(manifest.begin(), manifest.end());
  EXPECT_NE(m.find("seed=42"), std::string::npos);
  EXPECT_NE(m.find("start="), std::string::npos);
  EXPECT_NE(m.find("end="), std::string::npos);
  EXPECT_EQ(nn::serialize_checkpoint(nn::load_checkpoint(c.output_dir / "model.ckpt")),
            nn::serialize_checkpoint(r.model));
  std::filesystem::remove_all(root);
}

}  // namespace
}  // namespace icae::train
