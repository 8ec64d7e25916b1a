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

#include "icae/model.hpp"

#include <fstream>
#include <iterator>

#include "icae/byte_io.hpp"
#include "icae/error.hpp"
#include "icae/ops.hpp"
#include "icae/quantize.hpp"

namespace icae::nn {
namespace {

constexpr char kMagic[] = "ICAEMODL";
constexpr std::uint8_t kVersion = 1;

}  // namespace

HyperpriorModel HyperpriorModel::create(const ArchConfig& arch, double lambda,
                                        std::uint64_t seed) {
  arch.validate();
  require(lambda > 0, ErrorKind::kInvalidArgument, "lambda must be positive");
  Rng seeds(seed);
  HyperpriorModel m;
  m.arch_ = arch;
  m.lambda_ = lambda;
  m.g_a_ = build_transform(arch, TransformKind::kAnalysis, seeds.next_u64());
  m.g_s_ = build_transform(arch, TransformKind::kSynthesis, seeds.next_u64());
  m.h_a_ = build_transform(arch, TransformKind::kHyperAnalysis, seeds.next_u64());
  m.h_s_ = build_transform(arch, TransformKind::kHyperSynthesis, seeds.next_u64());
  m.prior_loc_ = Var(Tensor(Shape{1, arch.n_channels, 1, 1}, 0), true);
  m.prior_log_scale_ = Var(Tensor(Shape{1, arch.n_channels, 1, 1}, 0), true);
  return m;
}

TrainForward HyperpriorModel::forward_train(const Var& x, Rng& rng) const {
  using entropy::QuantizeMode;
  const Var y = g_a_.forward(x);
  const Var z = h_a_.forward(y);
  const Var z_tilde = entropy::quantize(z, QuantizeMode::kNoise, &rng);
  const Var sigma = h_s_.forward(z_tilde);
  const Var y_tilde = entropy::quantize(y, QuantizeMode::kNoise, &rng);
  TrainForward out;
  out.y_probs = gaussian_likelihood(y_tilde, sigma, conditional_.scale_floor);
  out.z_probs = logistic_likelihood(z_tilde, prior_loc_, prior_log_scale_);
  out.x_hat = g_s_.forward(y_tilde);
  return out;
}

std::vector<Var> HyperpriorModel::parameters() const {
  std::vector<Var> out;
  for (const TransformStack* s : {&g_a_, &g_s_, &h_a_, &h_s_}) {
    auto p = s->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  out.push_back(prior_loc_);
  out.push_back(prior_log_scale_);
  return out;
}

std::vector<std::string> HyperpriorModel::parameter_names() const {
  std::vector<std::string> out;
  for (const TransformStack* s : {&g_a_, &g_s_, &h_a_, &h_s_}) {
    const std::string stack(transform_name(s->kind()));
    for (std::size_t i = 0; i < s->layers().size(); ++i) {
      const Layer& l = s->layers()[i];
      const std::string prefix = stack + "." + std::to_string(i) + ".";
      out.push_back(prefix + "weight");
      out.push_back(prefix + "bias");
      if (l.beta_raw.defined()) out.push_back(prefix + "beta_raw");
      if (l.gamma_raw.defined()) out.push_back(prefix + "gamma_raw");
    }
  }
  out.push_back("prior.loc");
  out.push_back("prior.log_scale");
  return out;
}

std::vector<std::uint8_t> serialize_checkpoint(const HyperpriorModel& model) {
  ByteWriter w;
  w.raw(std::string(kMagic));
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(model.arch().variant));
  w.le(static_cast<std::uint32_t>(model.arch().n_channels), 4);
  w.le(static_cast<std::uint32_t>(model.arch().m_channels), 4);
  w.u8(model.arch().deepen_hyper ? 1 : 0);
  w.f64_le(model.lambda());
  for (const Var& p : model.parameters()) {
    const Tensor& t = p.value();
    w.le(static_cast<std::uint32_t>(t.numel()), 4);
    for (const Real v : t.data()) w.f32_le(static_cast<float>(v));
  }
  const std::uint64_t checksum = fnv1a64(w.bytes());
  w.le(checksum, 8);
  return w.take();
}

HyperpriorModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 8 + 8, ErrorKind::kIncompleteStream,
          "checkpoint too short");
  require(std::equal(bytes.begin(), bytes.begin() + 8, kMagic), ErrorKind::kBadMagic,
          "bad magic: not an ICAE model checkpoint");
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader tail(bytes.last(8));
  require(tail.le(8) == fnv1a64(body), ErrorKind::kChecksum,
          "checkpoint checksum mismatch");

  ByteReader r(body);
  r.take(8);
  const std::uint8_t version = r.u8();
  require(version == kVersion, ErrorKind::kUnsupportedVersion,
          "unsupported checkpoint version " + std::to_string(version));
  ArchConfig arch;
  const std::uint8_t variant = r.u8();
  require(variant <= 1, ErrorKind::kInvalidArgument,
          "unknown variant id " + std::to_string(variant));
  arch.variant = static_cast<Variant>(variant);
  arch.n_channels = static_cast<int>(r.le(4));
  arch.m_channels = static_cast<int>(r.le(4));
  arch.deepen_hyper = r.u8() != 0;
  require(arch.n_channels > 0 && arch.n_channels <= 4096 &&
              arch.m_channels > 0 && arch.m_channels <= 4096,
          ErrorKind::kInvalidArgument, "implausible channel counts");
  const double lambda = r.f64_le();

  HyperpriorModel model = HyperpriorModel::create(arch, lambda, 0);
  for (Var& p : model.parameters()) {
    Tensor& t = p.mutable_value();
    const auto count = r.le(4);
    require(count == static_cast<std::uint64_t>(t.numel()),
            ErrorKind::kModelMismatch,
            "checkpoint tensor has " + std::to_string(count) +
                " elements, architecture expects " + std::to_string(t.numel()));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = r.f32_le();
  }
  require(r.remaining() == 0, ErrorKind::kCorruptStream,
          "trailing bytes in checkpoint");
  return model;
}

void save_checkpoint(const HyperpriorModel& model,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo,
          "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::kIo,
          "failed writing checkpoint " + path.string());
}

HyperpriorModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo,
          "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace icae::nn
