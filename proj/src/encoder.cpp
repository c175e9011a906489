// Copyright 2026 The uwpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "uwpose/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"
#include "uwpose/error.hpp"

namespace uwpose {

namespace {

constexpr char kCheckpointMagic[9] = "UWPAEW01";
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (latent_dim < 2) throw std::invalid_argument("latent_dim must be >= 2");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0)) {
    throw std::invalid_argument("invalid Adam hyperparameters");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate},
       {"optimizer", {{"name", "adam"}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}}},
       {"latent_dim", c.latent_dim},
       {"batch_size", c.batch_size},
       {"iterations", c.iterations},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    c.beta1 = o.value("beta1", c.beta1);
    c.beta2 = o.value("beta2", c.beta2);
    c.epsilon = o.value("epsilon", c.epsilon);
  }
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.iterations = j.value("iterations", c.iterations);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

std::vector<TrainSample> render_training_views(const TriMesh& mesh,
                                               const std::vector<Rotation3>& rotations,
                                               const CameraIntrinsics& cam, double distance,
                                               const CropSettings& crop,
                                               const RenderStyle& style) {
  std::vector<TrainSample> out;
  out.reserve(rotations.size());
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    const PoseSE3 pose{rotations[i], Vec3(0, 0, distance)};
    const RenderOutput r = render(mesh, pose, cam, style);
    if (!r.valid) throw DataError("view " + std::to_string(i) + " renders empty");
    TrainSample s;
    s.crop = crop_square(r.color, r.bbox, crop.pad_factor, crop.size);
    s.mask = threshold_mask(crop_square(mask_to_image(r.mask), r.bbox, crop.pad_factor, crop.size));
    out.push_back(std::move(s));
  }
  return out;
}

double loss(const EncoderParams& params, const std::vector<LossPair>& batch) {
  Network<double> net(params);
  double total = 0.0;
  for (const auto& [input, target] : batch) {
    total += net.sample_loss(net.to_tensor(input), net.to_tensor(target), nullptr);
  }
  return total;
}

Eigen::VectorXd encode(const EncoderParams& params, const Image& image) {
  Network<double> net(params);
  return net.encode(image);
}

Image decode(const EncoderParams& params, const Eigen::VectorXd& latent) {
  Network<double> net(params);
  return net.decode(latent);
}

LossPair make_training_pair(const TrainSample& sample, const AugmentationConfig& aug,
                            const std::vector<Image>& backgrounds, SeededRng& rng) {
  const int size = sample.crop.width;
  Image input = sample.crop;
  if (!backgrounds.empty()) {
    const Image& bg = backgrounds[rng.uniform_int(static_cast<std::int64_t>(backgrounds.size()))];
    const int max_side = std::min(bg.width, bg.height);
    const double side = rng.uniform(std::min(size, max_side), max_side);
    const double x0 = rng.uniform(0, bg.width - side);
    const double y0 = rng.uniform(0, bg.height - side);
    const Image patch = crop_square(bg, {x0, y0, x0 + side, y0 + side}, 1.0, size);
    input = composite_background(sample.crop, sample.mask, patch);
  }
  input = f_aug(input, aug, rng);
  return {std::move(input), sample.crop};
}

TrainResult train(const TrainConfig& config, const std::vector<TrainSample>& dataset,
                  const AugmentationConfig& aug, const std::vector<Image>& backgrounds,
                  const std::optional<Architecture>& arch, const TrainProgress& progress) {
  config.validate();
  aug.validate();
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  const Architecture a =
      arch ? *arch : Architecture::default_conv(config.latent_dim, dataset.front().crop.width);

  using Net = Network<float>;
  EncoderParams init = EncoderParams::init(a, config.seed);
  Net net(init);
  const auto n = static_cast<Eigen::Index>(net.param_count());
  Net::Vec grad(n), m = Net::Vec::Zero(n), v = Net::Vec::Zero(n);

  SeededRng rng(config.seed ^ 0x5eed5eedULL);
  TrainResult result;
  result.losses.reserve(config.iterations);
  const auto lr = static_cast<float>(config.learning_rate);
  const auto b1 = static_cast<float>(config.beta1);
  const auto b2 = static_cast<float>(config.beta2);
  const auto eps = static_cast<float>(config.epsilon);

  for (int it = 0; it < config.iterations; ++it) {
    grad.setZero();
    double batch_loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      const auto& sample = dataset[rng.uniform_int(static_cast<std::int64_t>(dataset.size()))];
      const LossPair pair = make_training_pair(sample, aug, backgrounds, rng);
      batch_loss += net.sample_loss(net.to_tensor(pair.first), net.to_tensor(pair.second), &grad);
    }
    if (!std::isfinite(batch_loss) || !grad.allFinite()) {
      throw TrainingError("non-finite loss at iteration " + std::to_string(it) +
                          " (loss " + std::to_string(batch_loss) + ")");
    }
    const int t = it + 1;
    const float c1 = 1.0f - std::pow(b1, static_cast<float>(t));
    const float c2 = 1.0f - std::pow(b2, static_cast<float>(t));
    m = b1 * m + (1.0f - b1) * grad;
    v = b2 * v + (1.0f - b2) * grad.cwiseProduct(grad);
    net.params().array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);

    result.losses.push_back(batch_loss);
    if (progress) progress(it, batch_loss);
  }
  // No step taken: hand back the 64-bit initialization untouched.
  result.params = config.iterations == 0 ? std::move(init) : net.export_params();
  return result;
}

GradCheckResult gradient_check(const EncoderParams& params, const std::vector<LossPair>& batch,
                               const GradCheckOptions& options) {
  Network<double> net(params);
  std::vector<std::pair<Network<double>::Mat, Network<double>::Mat>> tensors;
  for (const auto& [in, target] : batch) tensors.emplace_back(net.to_tensor(in), net.to_tensor(target));

  const auto n = static_cast<Eigen::Index>(net.param_count());
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(n);
  for (const auto& [x, t] : tensors) net.sample_loss(x, t, &analytic);

  auto total_loss = [&]() {
    double s = 0.0;
    for (const auto& [x, t] : tensors) s += net.sample_loss(x, t, nullptr);
    return s;
  };

  std::vector<std::size_t> indices(static_cast<std::size_t>(n));
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  SeededRng rng(options.seed);
  const std::size_t k = std::min<std::size_t>(options.num_params, indices.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(indices.size() - i)));
    std::swap(indices[i], indices[j]);
  }

  GradCheckResult res;
  for (std::size_t i = 0; i < k; ++i) {
    const auto idx = static_cast<Eigen::Index>(indices[i]);
    const double saved = net.params()[idx];
    net.params()[idx] = saved + options.step;
    const double plus = total_loss();
    net.params()[idx] = saved - options.step;
    const double minus = total_loss();
    net.params()[idx] = saved;

    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (res.checked == 0 || rel > res.max_relative_error) {
      res.max_relative_error = rel;
      res.worst_index = indices[i];
    }
    ++res.checked;
  }
  return res;
}

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path,
                     const nlohmann::json& sidecar) {
  const std::string descriptor = architecture_to_json(params.arch).dump();
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic, 8);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_bytes(out, descriptor);
    detail::put_u64(out, static_cast<std::uint64_t>(params.values.size()));
    for (Eigen::Index i = 0; i < params.values.size(); ++i) detail::put_f64(out, params.values[i]);
    if (!out) throw DataError("failed writing checkpoint " + path.string());
  }
  nlohmann::json side = sidecar;
  side["format"] = "uwpose-weights";
  side["version"] = kCheckpointVersion;
  side["param_count"] = params.values.size();
  side["architecture"] = architecture_to_json(params.arch);
  std::ofstream js(path.string() + ".json");
  js << side.dump(2) << '\n';
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  detail::expect_magic(in, kCheckpointMagic, path.string());
  const std::uint32_t version = detail::get_u32(in);
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  EncoderParams p;
  try {
    p.arch = architecture_from_json(nlohmann::json::parse(detail::get_bytes(in)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad architecture descriptor: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": bad architecture descriptor: " + e.what());
  }
  const std::uint64_t count = detail::get_u64(in);
  if (count != resolve(p.arch).param_count) {
    throw DataError(path.string() + ": parameter count does not match architecture");
  }
  p.values.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    const double v = detail::get_f64(in);
    if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite weight");
    p.values[static_cast<Eigen::Index>(i)] = v;
  }
  return p;
}

}  // namespace uwpose
