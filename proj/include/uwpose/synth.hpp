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
#include <map>
#include <string>
#include <vector>

#include "uwpose/config.hpp"
#include "uwpose/io.hpp"
#include "uwpose/mesh.hpp"

namespace uwpose {

// Either a flat tinted backdrop with a gradient or a textured one built from
// random blobs and stripes. Channels in [0, 1].
Image procedural_background(int width, int height, SeededRng& rng);
std::vector<Image> procedural_backgrounds(int count, int width, int height, std::uint64_t seed);

// Writes a dataset under root: camera.json, objects/<id>.obj, and per scene
// rgb/, bg/ (clean backdrop with occluders) and gt.json. Each object depth
// is drawn uniformly from the configured range; image position and rotation
// are redrawn up to max_retries times until the object lies fully inside
// the frame without touching other objects. Backgrounds are procedural when
// the list is empty. Deterministic per seed.
SceneDataset generate_synthetic_scenes(const PipelineConfig& config,
                                       const std::map<std::string, TriMesh>& meshes,
                                       const std::vector<Image>& backgrounds, int frames_per_scene,
                                       std::uint64_t seed, const std::filesystem::path& root);

// Picks a class for a detected region; empty means "unassigned".
using ClassResolver = std::function<std::string(const Image& image, const BBox& bbox)>;

// Background subtraction: pixels whose largest channel difference exceeds
// the threshold, 8-connected components of at least min_area pixels, one
// detection per component in scan order. score = area / largest area.
std::vector<Detection> detect_naive(const Image& image, const Image& background,
                                    const DetectorConfig& config,
                                    const ClassResolver& resolve_class = {});

}  // namespace uwpose
