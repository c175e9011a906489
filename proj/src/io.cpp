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

#include "uwpose/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "uwpose/error.hpp"
#include "uwpose/mesh.hpp"

namespace fs = std::filesystem;

namespace uwpose {

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(where + ": field '" + key + "' has the wrong type");
  }
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw DataError("missing file " + p.string());
}

std::vector<double> numbers(const nlohmann::json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) {
    throw DataError(what + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError(what + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

PoseSE3 pose_from_arrays(const std::vector<double>& r, const std::vector<double>& t) {
  Mat3 m;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) m(a, b) = r[static_cast<std::size_t>(3 * a + b)];
  }
  const Vec3 tv(t[0], t[1], t[2]);
  if (!m.allFinite() || !tv.allFinite()) throw DataError("pose has non-finite entries");
  const Mat3 residual = m.transpose() * m - Mat3::Identity();
  if (residual.cwiseAbs().maxCoeff() > 1e-6 || std::abs(m.determinant() - 1.0) > 1e-6) {
    throw DataError("pose rotation is not a proper rotation matrix");
  }
  return {Rotation3::nearest(m), tv};
}

std::vector<GTAnnotation> gt_objects(const nlohmann::json& objs, int frame_id,
                                     const std::string& where) {
  std::vector<GTAnnotation> out;
  if (!objs.is_array()) throw DataError(where + ": 'objects' must be an array");
  for (const auto& o : objs) {
    GTAnnotation g;
    g.frame_id = frame_id;
    g.class_id = get_field<std::string>(o, "class_id", where);
    if (!o.contains("bbox")) throw DataError(where + ": missing field 'bbox'");
    g.bbox = bbox_from_json(o.at("bbox"));
    if (g.bbox.empty()) throw DataError(where + ": empty gt bbox");
    if (o.contains("pose") && !o.at("pose").is_null()) g.pose = pose_from_json(o.at("pose"));
    out.push_back(std::move(g));
  }
  return out;
}

void sort_and_check(Scene& s, const std::string& where) {
  std::sort(s.frames.begin(), s.frames.end(),
            [](const SceneFrame& a, const SceneFrame& b) { return a.frame_id < b.frame_id; });
  for (std::size_t i = 1; i < s.frames.size(); ++i) {
    if (s.frames[i].frame_id == s.frames[i - 1].frame_id) {
      throw DataError(where + ": duplicate frame id " + std::to_string(s.frames[i].frame_id));
    }
  }
}

Scene load_native_scene(const fs::path& dir) {
  Scene s;
  s.id = dir.filename().string();
  const fs::path gt_path = dir / "gt.json";
  const nlohmann::json gt = read_json(gt_path);
  const std::string where = gt_path.string();
  if (!gt.contains("frames") || !gt.at("frames").is_array()) {
    throw DataError(where + ": missing 'frames' array");
  }
  for (const auto& f : gt.at("frames")) {
    SceneFrame fr;
    fr.frame_id = get_field<int>(f, "frame_id", where);
    const std::string fname = frame_file_name(fr.frame_id);
    fr.rgb = dir / f.value("rgb", "rgb/" + fname);
    require_file(fr.rgb);
    if (f.contains("background")) {
      fr.background = dir / f.at("background").get<std::string>();
      require_file(*fr.background);
    }
    if (fs::is_regular_file(dir / "depth" / fname)) fr.depth = dir / "depth" / fname;
    fr.gt = gt_objects(f.value("objects", nlohmann::json::array()), fr.frame_id, where);
    s.frames.push_back(std::move(fr));
  }
  sort_and_check(s, where);

  auto find_frame = [&](int id, const std::string& file) -> SceneFrame& {
    for (auto& fr : s.frames) {
      if (fr.frame_id == id) return fr;
    }
    throw DataError(file + ": unknown frame id " + std::to_string(id));
  };

  const fs::path det_path = dir / "detections.json";
  if (fs::exists(det_path)) {
    const nlohmann::json dj = read_json(det_path);
    for (const auto& f : dj.value("frames", nlohmann::json::array())) {
      const int id = get_field<int>(f, "frame_id", det_path.string());
      auto& fr = find_frame(id, det_path.string());
      std::vector<Detection> dets;
      for (const auto& d : f.value("detections", nlohmann::json::array())) {
        dets.push_back(detection_from_json(d, id));
      }
      fr.detections = std::move(dets);
    }
  }
  const fs::path bundle_path = dir / "bundle.json";
  if (fs::exists(bundle_path)) {
    const nlohmann::json bj = read_json(bundle_path);
    for (const auto& f : bj.value("frames", nlohmann::json::array())) {
      const int id = get_field<int>(f, "frame_id", bundle_path.string());
      if (!f.contains("bundle_pose")) throw DataError(bundle_path.string() + ": missing bundle_pose");
      find_frame(id, bundle_path.string()).bundle_pose = pose_from_json(f.at("bundle_pose"));
    }
  }
  return s;
}

std::string bop_class(int obj_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "obj_%06d", obj_id);
  return buf;
}

// BOP: scene_gt.json maps image id to [{cam_R_m2c, cam_t_m2c, obj_id}];
// boxes come from scene_gt_info.json (bbox_obj, [x, y, w, h]).
Scene load_bop_scene(const fs::path& dir) {
  Scene s;
  s.id = dir.filename().string();
  const fs::path gt_path = dir / "scene_gt.json";
  const fs::path info_path = dir / "scene_gt_info.json";
  const nlohmann::json gt = read_json(gt_path);
  const nlohmann::json info = fs::exists(info_path) ? read_json(info_path) : nlohmann::json::object();
  for (const auto& [key, objs] : gt.items()) {
    SceneFrame fr;
    try {
      fr.frame_id = std::stoi(key);
    } catch (const std::exception&) {
      throw DataError(gt_path.string() + ": image id '" + key + "' is not an integer");
    }
    fr.rgb = dir / "rgb" / frame_file_name(fr.frame_id);
    require_file(fr.rgb);
    if (fs::is_regular_file(dir / "depth" / frame_file_name(fr.frame_id))) {
      fr.depth = dir / "depth" / frame_file_name(fr.frame_id);
    }
    const nlohmann::json* infos = info.contains(key) ? &info.at(key) : nullptr;
    std::size_t k = 0;
    for (const auto& o : objs) {
      GTAnnotation g;
      g.frame_id = fr.frame_id;
      g.class_id = bop_class(get_field<int>(o, "obj_id", gt_path.string()));
      g.pose = pose_from_arrays(numbers(o.at("cam_R_m2c"), 9, "cam_R_m2c"),
                                numbers(o.at("cam_t_m2c"), 3, "cam_t_m2c"));
      if (!infos || k >= infos->size()) {
        throw DataError(info_path.string() + ": no box for image " + key + " object " +
                        std::to_string(k));
      }
      const auto b = numbers(infos->at(k).at("bbox_obj"), 4, "bbox_obj");
      g.bbox = {b[0], b[1], b[0] + b[2], b[1] + b[3]};
      if (g.bbox.empty()) throw DataError(info_path.string() + ": empty box for image " + key);
      fr.gt.push_back(std::move(g));
      ++k;
    }
    s.frames.push_back(std::move(fr));
  }
  sort_and_check(s, gt_path.string());
  return s;
}

}  // namespace

nlohmann::json pose_to_json(const PoseSE3& p) {
  std::vector<double> r;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) r.push_back(p.rotation.matrix()(a, b));
  }
  return {{"R", r}, {"t", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

PoseSE3 pose_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("R") || !j.contains("t")) {
    throw DataError("pose must be an object with 'R' and 't'");
  }
  return pose_from_arrays(numbers(j.at("R"), 9, "pose R"), numbers(j.at("t"), 3, "pose t"));
}

nlohmann::json camera_to_json(const CameraIntrinsics& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width},
          {"height", c.height}};
}

CameraIntrinsics camera_from_json(const nlohmann::json& j) {
  CameraIntrinsics c;
  const std::string where = "camera";
  c.fx = get_field<double>(j, "fx", where);
  c.fy = get_field<double>(j, "fy", where);
  c.cx = get_field<double>(j, "cx", where);
  c.cy = get_field<double>(j, "cy", where);
  c.width = get_field<int>(j, "width", where);
  c.height = get_field<int>(j, "height", where);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("camera: ") + e.what());
  }
  return c;
}

nlohmann::json bbox_to_json(const BBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }

BBox bbox_from_json(const nlohmann::json& j) {
  const auto v = numbers(j, 4, "bbox");
  return {v[0], v[1], v[2], v[3]};
}

nlohmann::json detection_to_json(const Detection& d) {
  return {{"class_id", d.class_id}, {"bbox", bbox_to_json(d.bbox)}, {"score", d.score}};
}

Detection detection_from_json(const nlohmann::json& j, int frame_id) {
  Detection d;
  d.frame_id = frame_id;
  d.class_id = get_field<std::string>(j, "class_id", "detection");
  if (!j.contains("bbox")) throw DataError("detection: missing field 'bbox'");
  d.bbox = bbox_from_json(j.at("bbox"));
  d.score = j.contains("score") ? get_field<double>(j, "score", "detection") : 1.0;
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("detection: ") + e.what());
  }
  return d;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::size_t SceneDataset::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : scenes) n += s.frames.size();
  return n;
}

std::string frame_file_name(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.png", frame_id);
  return buf;
}

SceneSchema detect_schema(const fs::path& scene_dir) {
  if (fs::exists(scene_dir / "gt.json")) return SceneSchema::kNative;
  if (fs::exists(scene_dir / "scene_gt.json")) return SceneSchema::kBop;
  throw DataError(scene_dir.string() + ": neither gt.json nor scene_gt.json found");
}

Scene load_scene(const fs::path& scene_dir, SceneSchema schema) {
  return schema == SceneSchema::kNative ? load_native_scene(scene_dir) : load_bop_scene(scene_dir);
}

SceneDataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset directory " + root.string() + " not found");
  SceneDataset ds;
  ds.root = root;
  ds.camera = camera_from_json(read_json(root / "camera.json"));

  const fs::path objects = root / "objects";
  if (fs::is_directory(objects)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(objects)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      const std::string ext = p.extension().string();
      if (ext != ".obj" && ext != ".ply") continue;
      const std::string id = p.stem().string();
      if (ds.objects.count(id)) throw DataError("object '" + id + "' registered twice");
      ObjectEntry e;
      e.mesh = p;
      e.diameter = load_mesh(p).diameter;
      const fs::path off = objects / (id + ".offset.json");
      if (fs::exists(off)) {
        const nlohmann::json oj = read_json(off);
        if (!oj.contains("T_O_B")) throw DataError(off.string() + ": missing T_O_B");
        e.bundle_offset = pose_from_json(oj.at("T_O_B"));
      }
      ds.objects[id] = e;
    }
  }

  const fs::path scenes = root / "scenes";
  if (fs::is_directory(scenes)) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(scenes)) {
      if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) ds.scenes.push_back(load_scene(d, detect_schema(d)));
  }

  for (const auto& s : ds.scenes) {
    for (const auto& f : s.frames) {
      for (const auto& g : f.gt) {
        if (!ds.objects.count(g.class_id)) {
          throw DataError("scene " + s.id + " frame " + std::to_string(f.frame_id) +
                          " references unregistered object '" + g.class_id + "'");
        }
      }
    }
  }
  return ds;
}

void save_dataset_metadata(const SceneDataset& ds) {
  write_json(camera_to_json(ds.camera), ds.root / "camera.json");
  for (const auto& s : ds.scenes) {
    const fs::path dir = ds.root / "scenes" / s.id;
    nlohmann::json frames = nlohmann::json::array();
    nlohmann::json dets = nlohmann::json::array();
    nlohmann::json bundles = nlohmann::json::array();
    for (const auto& f : s.frames) {
      nlohmann::json objs = nlohmann::json::array();
      for (const auto& g : f.gt) {
        nlohmann::json o = {{"class_id", g.class_id}, {"bbox", bbox_to_json(g.bbox)}};
        if (g.pose) o["pose"] = pose_to_json(*g.pose);
        objs.push_back(std::move(o));
      }
      nlohmann::json fj = {{"frame_id", f.frame_id},
                           {"rgb", f.rgb.lexically_relative(dir).generic_string()}};
      if (f.background) fj["background"] = f.background->lexically_relative(dir).generic_string();
      fj["objects"] = std::move(objs);
      frames.push_back(std::move(fj));
      if (f.detections) {
        nlohmann::json dl = nlohmann::json::array();
        for (const auto& d : *f.detections) dl.push_back(detection_to_json(d));
        dets.push_back({{"frame_id", f.frame_id}, {"detections", std::move(dl)}});
      }
      if (f.bundle_pose) {
        bundles.push_back({{"frame_id", f.frame_id}, {"bundle_pose", pose_to_json(*f.bundle_pose)}});
      }
    }
    write_json({{"frames", frames}}, dir / "gt.json");
    if (!dets.empty()) write_json({{"frames", dets}}, dir / "detections.json");
    if (!bundles.empty()) write_json({{"frames", bundles}}, dir / "bundle.json");
  }
}

}  // namespace uwpose
