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

#include "uwpose/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "uwpose/error.hpp"
#include "uwpose/rng.hpp"
#include "uwpose/synth.hpp"

namespace uwpose {

namespace {

constexpr int kFrameStride = 1000000;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrainResult train_object(const ObjectConfig& object, const TriMesh& mesh,
                         const CameraIntrinsics& cam, int background_count, std::uint64_t seed,
                         const TrainProgress& progress) {
  SeededRng rot_rng = SeededRng(seed).fork(1);
  std::vector<Rotation3> rotations;
  rotations.reserve(static_cast<std::size_t>(object.train_views));
  for (int i = 0; i < object.train_views; ++i) rotations.push_back(random_rotation(rot_rng));
  const auto samples = render_training_views(mesh, rotations, cam, object.render_distance, object.crop);
  const auto backgrounds =
      procedural_backgrounds(background_count, 256, 256, SeededRng(seed).fork(2).next_u64());
  TrainConfig tc = object.train;
  tc.seed = seed;
  return train(tc, samples, object.augmentation, backgrounds,
               Architecture::default_conv(tc.latent_dim, object.crop.size), progress);
}

Codebook build_object_codebook(const ObjectConfig& object, const TriMesh& mesh,
                               const EncoderParams& params, const CameraIntrinsics& cam) {
  return build_codebook(object.id, mesh, params,
                        sample_view_rotations(object.grid_views, object.grid_inplane), cam,
                        object.render_distance, object.crop);
}

DetectionSource parse_detection_source(const std::string& name) {
  if (name == "gt") return DetectionSource::kGroundTruth;
  if (name == "naive") return DetectionSource::kNaive;
  if (name == "file") return DetectionSource::kFile;
  throw std::invalid_argument("unknown detection source '" + name + "' (gt, naive, file)");
}

PipelineResult run_pipeline(const SceneDataset& ds, EstimatorMap& estimators,
                            DetectionSource source, const DetectorConfig& detector,
                            const EstimateOptions& options) {
  PipelineResult out;
  ClassResolver resolver;
  if (estimators.size() == 1) {
    const std::string only = estimators.begin()->first;
    resolver = [only](const Image&, const BBox&) { return only; };
  } else if (!estimators.empty()) {
    resolver = [&estimators](const Image& img, const BBox& box) {
      std::string best;
      double best_sim = -2.0;
      for (auto& [id, est] : estimators) {
        const CropSettings& cs = est->codebook().crop;
        const auto code = est->encode_crop(crop_square(img, box, cs.pad_factor, cs.size));
        if (code.norm() == 0) continue;
        const double sim = lookup(est->codebook(), code, 1).front().similarity;
        if (sim > best_sim) {
          best_sim = sim;
          best = id;
        }
      }
      return best;
    };
  }

  for (const auto& scene : ds.scenes) {
    for (const auto& frame : scene.frames) {
      const Image image = read_png(frame.rgb);
      std::vector<Detection> dets;
      const auto t0 = std::chrono::steady_clock::now();
      switch (source) {
        case DetectionSource::kGroundTruth:
          for (const auto& g : frame.gt) dets.push_back({g.class_id, g.bbox, 1.0, frame.frame_id});
          break;
        case DetectionSource::kNaive: {
          if (!frame.background) {
            throw DataError("scene " + scene.id + " frame " + std::to_string(frame.frame_id) +
                            " has no background image for the naive detector");
          }
          dets = detect_naive(image, read_png(*frame.background), detector, resolver);
          for (auto& d : dets) d.frame_id = frame.frame_id;
          break;
        }
        case DetectionSource::kFile:
          if (frame.detections) dets = *frame.detections;
          break;
      }
      out.timing.detect_ms.push_back(elapsed_ms(t0));

      for (const auto& d : dets) {
        EstimateRecord rec;
        rec.scene = scene.id;
        rec.frame_id = frame.frame_id;
        rec.detection = d;
        const auto it = estimators.find(d.class_id);
        if (it == estimators.end()) {
          rec.error = "no codebook for class '" + d.class_id + "'";
        } else {
          const auto t1 = std::chrono::steady_clock::now();
          try {
            rec.estimate = it->second->estimate(image, d.bbox, ds.camera, options);
          } catch (const std::exception& e) {
            rec.error = e.what();
          }
          out.timing.estimate_ms.push_back(elapsed_ms(t1));
        }
        out.records.push_back(std::move(rec));
      }
    }
  }
  return out;
}

nlohmann::json estimates_to_json(const std::vector<EstimateRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j = {{"scene", r.scene},
                        {"frame_id", r.frame_id},
                        {"class_id", r.detection.class_id},
                        {"bbox", bbox_to_json(r.detection.bbox)},
                        {"score", r.detection.score}};
    if (r.estimate) {
      j["estimate"] = {{"pose", pose_to_json(r.estimate->pose)},
                       {"similarity", r.estimate->similarity},
                       {"codebook_index", r.estimate->codebook_index}};
    } else {
      j["estimate"] = nullptr;
    }
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(std::move(j));
  }
  return {{"records", arr}};
}

std::vector<EstimateRecord> estimates_from_json(const nlohmann::json& j) {
  std::vector<EstimateRecord> out;
  if (!j.contains("records") || !j.at("records").is_array()) {
    throw DataError("estimates: missing 'records' array");
  }
  try {
    for (const auto& rj : j.at("records")) {
      EstimateRecord r;
      r.scene = rj.at("scene").get<std::string>();
      r.frame_id = rj.at("frame_id").get<int>();
      r.detection = detection_from_json(rj, r.frame_id);
      if (rj.contains("estimate") && !rj.at("estimate").is_null()) {
        const auto& ej = rj.at("estimate");
        PoseEstimate e;
        e.pose = pose_from_json(ej.at("pose"));
        e.similarity = ej.at("similarity").get<double>();
        e.codebook_index = ej.at("codebook_index").get<std::size_t>();
        e.object_id = r.detection.class_id;
        r.estimate = e;
      }
      r.error = rj.value("error", "");
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("estimates: ") + e.what());
  }
  return out;
}

nlohmann::json timing_to_json(const StageTimes& t) {
  auto stats = [](const std::vector<double>& v) {
    if (v.empty()) return nlohmann::json{{"count", 0}};
    return nlohmann::json{{"count", v.size()},
                          {"p50_ms", percentile(v, 50)},
                          {"p90_ms", percentile(v, 90)},
                          {"p99_ms", percentile(v, 99)}};
  };
  return {{"detect", stats(t.detect_ms)}, {"estimate", stats(t.estimate_ms)}};
}

EvalReport evaluate_poses(const SceneDataset& ds, const std::vector<EstimateRecord>& records,
                          const EvalSettings& settings) {
  settings.validate();
  std::map<std::string, TriMesh> meshes;
  std::map<std::string, std::vector<Vec3>> points;
  std::map<std::string, double> diameters;
  for (const auto& [id, entry] : ds.objects) {
    TriMesh m = load_mesh(entry.mesh);
    points[id] = settings.surface_sampling ? sample_surface_points(m, settings.surface_points, 0)
                                           : m.vertices;
    diameters[id] = m.diameter;
    meshes.emplace(id, std::move(m));
  }

  std::map<std::pair<std::string, int>, std::vector<const EstimateRecord*>> by_frame;
  for (const auto& r : records) by_frame[{r.scene, r.frame_id}].push_back(&r);

  std::vector<FrameRecord> out;
  std::vector<std::string> warnings;
  for (const auto& scene : ds.scenes) {
    for (const auto& frame : scene.frames) {
      std::vector<const EstimateRecord*> cands = by_frame[{scene.id, frame.frame_id}];
      std::vector<bool> used(cands.size(), false);
      for (const auto& g : frame.gt) {
        std::optional<PoseSE3> gt_pose = g.pose;
        if (!gt_pose && frame.bundle_pose && ds.objects.at(g.class_id).bundle_offset) {
          gt_pose = recover_object_pose(*frame.bundle_pose, *ds.objects.at(g.class_id).bundle_offset);
        }
        if (!gt_pose) {
          warnings.push_back("scene " + scene.id + " frame " + std::to_string(frame.frame_id) +
                             ": no ground truth pose for '" + g.class_id + "'");
          continue;
        }
        FrameRecord rec;
        rec.scene = scene.id;
        rec.frame_id = frame.frame_id;
        rec.object_id = g.class_id;
        std::size_t best = cands.size();
        double best_iou = -1;
        for (std::size_t i = 0; i < cands.size(); ++i) {
          if (used[i] || !cands[i]->estimate || cands[i]->detection.class_id != g.class_id) continue;
          const double v = iou(cands[i]->detection.bbox, g.bbox);
          if (v > best_iou) {
            best_iou = v;
            best = i;
          }
        }
        if (best < cands.size()) {
          used[best] = true;
          const PoseSE3& est = cands[best]->estimate->pose;
          const auto& pts = points.at(g.class_id);
          const TriMesh& mesh = meshes.at(g.class_id);
          rec.estimated = true;
          rec.e_add = e_add(pts, est, *gt_pose);
          rec.e_adi = e_adi(pts, est, *gt_pose);
          rec.e_cou = e_cou(render(mesh, est, ds.camera).mask, render(mesh, *gt_pose, ds.camera).mask);
          const PoseError pe = pose_errors(est, *gt_pose);
          rec.t_e = pe.t_e;
          rec.r_e = pe.r_e;
        }
        out.push_back(rec);
      }
    }
  }
  const double map = mean_average_precision(flatten_detections(ds, records), flatten_gt(ds),
                                            settings.iou_thresholds, settings.ap);
  EvalReport rep = aggregate_report(std::move(out), diameters, settings, map);
  rep.warnings.insert(rep.warnings.begin(), warnings.begin(), warnings.end());
  return rep;
}

std::vector<Detection> flatten_detections(const SceneDataset& ds,
                                          const std::vector<EstimateRecord>& records) {
  std::map<std::string, int> scene_index;
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) scene_index[ds.scenes[i].id] = static_cast<int>(i);
  std::vector<Detection> out;
  for (const auto& r : records) {
    const auto it = scene_index.find(r.scene);
    if (it == scene_index.end()) throw DataError("estimate refers to unknown scene '" + r.scene + "'");
    Detection d = r.detection;
    d.frame_id = it->second * kFrameStride + r.frame_id;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<GTAnnotation> flatten_gt(const SceneDataset& ds) {
  std::vector<GTAnnotation> out;
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    for (const auto& f : ds.scenes[i].frames) {
      for (GTAnnotation g : f.gt) {
        g.frame_id = static_cast<int>(i) * kFrameStride + f.frame_id;
        out.push_back(std::move(g));
      }
    }
  }
  return out;
}

DetectionReport evaluate_detections(const SceneDataset& ds, const std::vector<Detection>& dets,
                                    const EvalSettings& settings) {
  settings.validate();
  DetectionReport rep;
  rep.settings = settings;
  const auto gts = flatten_gt(ds);
  std::set<std::string> classes;
  for (const auto& g : gts) classes.insert(g.class_id);
  for (const auto& c : classes) {
    std::vector<Detection> dc;
    std::vector<GTAnnotation> gc;
    for (const auto& d : dets) {
      if (d.class_id == c) dc.push_back(d);
    }
    for (const auto& g : gts) {
      if (g.class_id == c) gc.push_back(g);
    }
    for (double th : settings.iou_thresholds) rep.ap[c].push_back(average_precision(dc, gc, th, settings.ap));
  }
  rep.map = mean_average_precision(dets, gts, settings.iou_thresholds, settings.ap);
  return rep;
}

nlohmann::json DetectionReport::to_json() const {
  return {{"map", map},
          {"iou_thresholds", settings.iou_thresholds},
          {"ap_recall_points", settings.ap.recall_points},
          {"ap", ap}};
}

std::string DetectionReport::to_text() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-16s", "class");
  out << buf;
  for (double t : settings.iou_thresholds) {
    std::snprintf(buf, sizeof buf, "%8.2f", t);
    out << buf;
  }
  out << '\n';
  for (const auto& [c, v] : ap) {
    std::snprintf(buf, sizeof buf, "%-16s", c.c_str());
    out << buf;
    for (double a : v) {
      std::snprintf(buf, sizeof buf, "%8.4f", a);
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "mAP %.4f (%d-point interpolation)\n", map, settings.ap.recall_points);
  out << buf;
  return out.str();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q >= 0 && q <= 100)) throw std::invalid_argument("percentile must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n));
  if (rank == 0) rank = 1;
  return values[std::min(rank, values.size()) - 1];
}

LatencyStats measure_latency(const std::string& name, int iterations, const std::function<void()>& fn) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  std::vector<double> t;
  for (int i = 0; i <= iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    if (i > 0) t.push_back(elapsed_ms(t0));
  }
  LatencyStats s;
  s.name = name;
  s.samples = iterations;
  s.p50 = percentile(t, 50);
  s.p90 = percentile(t, 90);
  s.p99 = percentile(t, 99);
  double sum = 0;
  for (double v : t) sum += v;
  s.mean = sum / static_cast<double>(t.size());
  return s;
}

}  // namespace uwpose
