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
#include <string>
#include <vector>

#include "json.hpp"
#include "uwpose/augment.hpp"
#include "uwpose/encoder.hpp"
#include "uwpose/eval.hpp"
#include "uwpose/render.hpp"

namespace uwpose {

struct ObjectConfig {
  std::string id;
  std::string mesh;  // file path (relative to the config) or "builtin:<name>"
  AugmentationConfig augmentation = AugmentationConfig::for_object("box");
  TrainConfig train;
  int train_views = 2000;  // Haar-random training orientations
  int grid_views = 1000;   // codebook view directions
  int grid_inplane = 36;   // codebook in-plane steps
  double render_distance = 1000;  // mm
  CropSettings crop;
};

struct GeneratorConfig {
  int scenes = 1;
  int frames = 50;  // per scene
  int objects_per_frame = 1;
  double depth_min = 400, depth_max = 3000;  // mm
  int max_occluders = 0;
  double occluder_max_size = 0.25;  // fraction of image height
  double noise_sigma = 0.01;
  int max_retries = 100;
};

struct DetectorConfig {
  double threshold = 0.08;  // max channel difference
  int min_area = 30;        // px
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  CameraIntrinsics camera;
  std::vector<ObjectConfig> objects;
  GeneratorConfig generator;
  DetectorConfig detector;
  EvalSettings eval;
  bool ray_correction = true;
  int background_count = 24;  // procedural backgrounds for training
  int bench_iterations = 50;
  std::filesystem::path base_dir;  // for relative mesh paths

  // One builtin l_block object, everything else at defaults.
  static PipelineConfig defaults();
  static PipelineConfig load(const std::filesystem::path& path);

  const ObjectConfig& object(const std::string& id) const;
  // Throws DataError on invalid values or unreadable meshes.
  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
// Throws DataError with the offending key on invalid input.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

}  // namespace uwpose
