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

#include "uwpose/config.hpp"

#include <set>

#include "uwpose/error.hpp"
#include "uwpose/io.hpp"
#include "uwpose/mesh.hpp"

namespace uwpose {

namespace {

ObjectConfig default_object() {
  ObjectConfig o;
  o.id = "l_block";
  o.mesh = "builtin:l_block";
  return o;
}

void object_to_json(nlohmann::json& j, const ObjectConfig& o) {
  j = {{"id", o.id},
       {"mesh", o.mesh},
       {"augmentation", o.augmentation},
       {"train", o.train},
       {"train_views", o.train_views},
       {"grid", {{"views", o.grid_views}, {"inplane", o.grid_inplane}}},
       {"render_distance", o.render_distance},
       {"crop", {{"pad_factor", o.crop.pad_factor}, {"size", o.crop.size}}}};
}

ObjectConfig object_from_json(const nlohmann::json& j) {
  ObjectConfig o;
  o.id = j.at("id").get<std::string>();
  o.mesh = j.at("mesh").get<std::string>();
  if (j.contains("augmentation")) o.augmentation = j.at("augmentation").get<AugmentationConfig>();
  if (j.contains("train")) o.train = j.at("train").get<TrainConfig>();
  o.train_views = j.value("train_views", o.train_views);
  if (j.contains("grid")) {
    o.grid_views = j.at("grid").value("views", o.grid_views);
    o.grid_inplane = j.at("grid").value("inplane", o.grid_inplane);
  }
  o.render_distance = j.value("render_distance", o.render_distance);
  if (j.contains("crop")) {
    o.crop.pad_factor = j.at("crop").value("pad_factor", o.crop.pad_factor);
    o.crop.size = j.at("crop").value("size", o.crop.size);
  }
  return o;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  c.objects.push_back(default_object());
  return c;
}

const ObjectConfig& PipelineConfig::object(const std::string& id) const {
  for (const auto& o : objects) {
    if (o.id == id) return o;
  }
  throw DataError("object '" + id + "' is not in the config");
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw DataError("config: " + what); };
  try {
    camera.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (objects.empty()) fail("no objects configured");
  std::set<std::string> ids;
  for (const auto& o : objects) {
    if (o.id.empty()) fail("object id is empty");
    if (!ids.insert(o.id).second) fail("duplicate object id '" + o.id + "'");
    try {
      o.augmentation.validate();
      o.train.validate();
    } catch (const std::invalid_argument& e) {
      fail(o.id + ": " + e.what());
    }
    if (o.train_views < 1) fail(o.id + ": train_views must be >= 1");
    if (o.grid_views < 4 || o.grid_inplane < 1) fail(o.id + ": grid needs >= 4 views and >= 1 step");
    if (!(o.render_distance > 0)) fail(o.id + ": render_distance must be positive");
    if (!(o.crop.pad_factor >= 1.0) || o.crop.size < 16 || o.crop.size % 16 != 0) {
      fail(o.id + ": crop needs pad_factor >= 1 and a size that is a multiple of 16");
    }
    mesh_from_spec(o.mesh, base_dir);
  }
  const auto& g = generator;
  if (g.scenes < 1 || g.frames < 1) fail("generator needs >= 1 scene and frame");
  if (g.objects_per_frame < 1) fail("objects_per_frame must be >= 1");
  if (!(g.depth_min > 0) || !(g.depth_max > g.depth_min)) fail("invalid depth range");
  if (g.max_occluders < 0 || !(g.occluder_max_size > 0 && g.occluder_max_size <= 1)) {
    fail("invalid occluder settings");
  }
  if (!(g.noise_sigma >= 0) || g.max_retries < 1) fail("invalid generator noise or retries");
  if (!(detector.threshold > 0) || detector.min_area < 1) fail("invalid detector settings");
  try {
    eval.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (background_count < 0 || bench_iterations < 2) fail("invalid background or bench counts");
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : c.objects) {
    nlohmann::json oj;
    object_to_json(oj, o);
    objs.push_back(oj);
  }
  const auto& g = c.generator;
  j = {{"seed", c.seed},
       {"camera", camera_to_json(c.camera)},
       {"objects", objs},
       {"generator",
        {{"scenes", g.scenes},
         {"frames", g.frames},
         {"objects_per_frame", g.objects_per_frame},
         {"depth_min", g.depth_min},
         {"depth_max", g.depth_max},
         {"max_occluders", g.max_occluders},
         {"occluder_max_size", g.occluder_max_size},
         {"noise_sigma", g.noise_sigma},
         {"max_retries", g.max_retries}}},
       {"detector", {{"threshold", c.detector.threshold}, {"min_area", c.detector.min_area}}},
       {"eval", c.eval},
       {"ray_correction", c.ray_correction},
       {"background_count", c.background_count},
       {"bench_iterations", c.bench_iterations}};
}

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c = PipelineConfig::defaults();
  c.base_dir = base_dir;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("camera")) c.camera = camera_from_json(j.at("camera"));
    if (j.contains("objects")) {
      c.objects.clear();
      for (const auto& o : j.at("objects")) c.objects.push_back(object_from_json(o));
    }
    if (j.contains("generator")) {
      const auto& gj = j.at("generator");
      auto& g = c.generator;
      g.scenes = gj.value("scenes", g.scenes);
      g.frames = gj.value("frames", g.frames);
      g.objects_per_frame = gj.value("objects_per_frame", g.objects_per_frame);
      g.depth_min = gj.value("depth_min", g.depth_min);
      g.depth_max = gj.value("depth_max", g.depth_max);
      g.max_occluders = gj.value("max_occluders", g.max_occluders);
      g.occluder_max_size = gj.value("occluder_max_size", g.occluder_max_size);
      g.noise_sigma = gj.value("noise_sigma", g.noise_sigma);
      g.max_retries = gj.value("max_retries", g.max_retries);
    }
    if (j.contains("detector")) {
      c.detector.threshold = j.at("detector").value("threshold", c.detector.threshold);
      c.detector.min_area = j.at("detector").value("min_area", c.detector.min_area);
    }
    if (j.contains("eval")) c.eval = j.at("eval").get<EvalSettings>();
    c.ray_correction = j.value("ray_correction", c.ray_correction);
    c.background_count = j.value("background_count", c.background_count);
    c.bench_iterations = j.value("bench_iterations", c.bench_iterations);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return config_from_json(read_json(path), path.parent_path());
}

}  // namespace uwpose
