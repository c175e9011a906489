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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "uwpose/augment.hpp"
#include "uwpose/image.hpp"
#include "uwpose/mesh.hpp"
#include "uwpose/network.hpp"
#include "uwpose/render.hpp"

namespace uwpose {

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int latent_dim = 128;
  int batch_size = 32;
  int iterations = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// A clean object crop on black and its silhouette at the same resolution.
struct TrainSample {
  Image crop;
  Mask mask;
};

// Crop parameters shared by training, codebook construction and inference.
struct CropSettings {
  double pad_factor = 1.2;
  int size = 64;
};

// Renders each rotation centered at (0, 0, distance) and crops the result.
// Throws DataError naming the first rotation that renders empty.
std::vector<TrainSample> render_training_views(const TriMesh& mesh,
                                               const std::vector<Rotation3>& rotations,
                                               const CameraIntrinsics& cam, double distance,
                                               const CropSettings& crop,
                                               const RenderStyle& style = {});

// One (input, target) pair for the reconstruction loss.
using LossPair = std::pair<Image, Image>;

// Sum over pairs of ||target - decode(encode(input))||_2, evaluated at 64-bit.
double loss(const EncoderParams& params, const std::vector<LossPair>& batch);

// 64-bit convenience forward passes. For repeated inference construct a
// Network<float> once instead.
Eigen::VectorXd encode(const EncoderParams& params, const Image& image);
Image decode(const EncoderParams& params, const Eigen::VectorXd& latent);

struct TrainResult {
  EncoderParams params;
  std::vector<double> losses;  // batch loss per iteration
};

using TrainProgress = std::function<void(int iteration, double loss)>;

// Builds one augmented training pair: background composited behind the
// crop, then f_aug. The target is the clean crop.
LossPair make_training_pair(const TrainSample& sample, const AugmentationConfig& aug,
                            const std::vector<Image>& backgrounds, SeededRng& rng);

// Adam on batches of augmented pairs, float arithmetic, single stream.
// Deterministic for a fixed seed. Throws TrainingError on a non-finite loss.
TrainResult train(const TrainConfig& config, const std::vector<TrainSample>& dataset,
                  const AugmentationConfig& aug, const std::vector<Image>& backgrounds,
                  const std::optional<Architecture>& arch = std::nullopt,
                  const TrainProgress& progress = {});

struct GradCheckOptions {
  int num_params = 200;
  double step = 1e-4;
  std::uint64_t seed = 1;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
  std::size_t worst_index = 0;
};

// Compares backprop gradients with central differences on randomly chosen
// parameters; relative error |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult gradient_check(const EncoderParams& params, const std::vector<LossPair>& batch,
                               const GradCheckOptions& options = {});

// Binary checkpoint plus "<path>.json" sidecar holding the train config.
void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path,
                     const nlohmann::json& sidecar = nlohmann::json::object());
EncoderParams load_checkpoint(const std::filesystem::path& path);

}  // namespace uwpose
