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

// Dataset layout and JSON formats.
//
//   <root>/camera.json
//   <root>/objects/<id>.obj            (+ optional <id>.offset.json)
//   <root>/scenes/<scene>/gt.json
//   <root>/scenes/<scene>/rgb/<frame>.png
//   <root>/scenes/<scene>/bg/<frame>.png        clean backdrop (synthetic)
//   <root>/scenes/<scene>/depth/<frame>.png     carried, never read
//   <root>/scenes/<scene>/detections.json       optional
//   <root>/scenes/<scene>/bundle.json           optional
//
// Scenes stored in the BOP layout (scene_gt.json, scene_gt_info.json,
// scene_camera.json) are read through an adapter.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uwpose/eval.hpp"
#include "uwpose/render.hpp"

namespace uwpose {

nlohmann::json pose_to_json(const PoseSE3& p);
// Rotation is projected onto SO(3) when within 1e-6 of orthonormal;
// anything further off throws DataError.
PoseSE3 pose_from_json(const nlohmann::json& j);

nlohmann::json camera_to_json(const CameraIntrinsics& c);
CameraIntrinsics camera_from_json(const nlohmann::json& j);

nlohmann::json bbox_to_json(const BBox& b);
BBox bbox_from_json(const nlohmann::json& j);

nlohmann::json detection_to_json(const Detection& d);
Detection detection_from_json(const nlohmann::json& j, int frame_id);

nlohmann::json read_json(const std::filesystem::path& path);
// Writes dump(2) plus a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

struct SceneFrame {
  int frame_id = 0;
  std::filesystem::path rgb;
  std::optional<std::filesystem::path> background;
  std::optional<std::filesystem::path> depth;
  std::vector<GTAnnotation> gt;
  std::optional<std::vector<Detection>> detections;
  std::optional<PoseSE3> bundle_pose;
};

struct Scene {
  std::string id;
  std::vector<SceneFrame> frames;  // sorted by frame_id, ids unique
};

struct ObjectEntry {
  std::filesystem::path mesh;
  double diameter = 0;
  std::optional<PoseSE3> bundle_offset;
};

struct SceneDataset {
  std::filesystem::path root;
  CameraIntrinsics camera;
  std::vector<Scene> scenes;
  std::map<std::string, ObjectEntry> objects;

  std::size_t frame_count() const;
};

enum class SceneSchema { kNative, kBop };

std::string frame_file_name(int frame_id);

// Throws DataError on missing files, malformed JSON, duplicate frame ids or
// references to unregistered objects.
SceneDataset load_dataset(const std::filesystem::path& root);
Scene load_scene(const std::filesystem::path& scene_dir, SceneSchema schema);
SceneSchema detect_schema(const std::filesystem::path& scene_dir);

// Writes camera.json and, per scene, gt.json, detections.json (when any
// frame carries detections) and bundle.json (when any frame has a bundle
// pose). Images and meshes are written by their producers.
void save_dataset_metadata(const SceneDataset& ds);

}  // namespace uwpose
