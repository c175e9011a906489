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

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uwpose/detection.hpp"
#include "uwpose/geom.hpp"
#include "uwpose/image.hpp"
#include "uwpose/mesh.hpp"

namespace uwpose {

struct GTAnnotation {
  std::string class_id;
  BBox bbox;
  std::optional<PoseSE3> pose;
  int frame_id = 0;
};

// --- pose metrics (mm) ---

double e_add(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt);

// Uses the grid search for large point sets and the pairwise scan otherwise.
double e_adi(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt);
double e_adi_bruteforce(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt);
double e_adi_grid(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt);

// 1 - IoU of two silhouettes; 0 when both are empty.
double e_cou(const Mask& pred, const Mask& gt);

struct PoseError {
  double t_e = 0;  // mm
  double r_e = 0;  // degrees, geodesic in [0, 180]
};
PoseError pose_errors(const PoseSE3& est, const PoseSE3& gt);

// Area-weighted surface sample; deterministic per seed.
std::vector<Vec3> sample_surface_points(const TriMesh& mesh, int count, std::uint64_t seed);

// --- recall ---

// Fraction of errors strictly below k * diameter, one entry per k. An empty
// list yields zeros and appends a warning when warnings is non-null.
std::vector<double> recall_table(const std::vector<double>& errors, double diameter,
                                 const std::vector<double>& k_m,
                                 std::vector<std::string>* warnings = nullptr);

// Fraction of CoU errors <= theta.
std::vector<double> cou_recall(const std::vector<double>& errors, const std::vector<double>& thetas,
                               std::vector<std::string>* warnings = nullptr);

// --- detection AP ---

struct APSettings {
  int recall_points = 101;
};

// Single-class AP. Detections are matched per frame_id in descending score
// order (ties keep input order) to the unmatched ground truth box of highest
// IoU at or above the threshold. AP is the mean of the interpolated
// precision max_{r' >= r} p(r') over r = 0, 1/(N-1), ..., 1. Returns 0 when
// there is no ground truth.
double average_precision(const std::vector<Detection>& dets, const std::vector<GTAnnotation>& gts,
                         double iou_threshold, const APSettings& settings = {});

// Mean of per-class AP over every class present in gts and every threshold.
double mean_average_precision(const std::vector<Detection>& dets,
                              const std::vector<GTAnnotation>& gts,
                              const std::vector<double>& iou_thresholds,
                              const APSettings& settings = {});

// --- marker bundle ground truth ---

// Bundle pose expressed in the object frame: inv(O) * B.
PoseSE3 bundle_offset(const PoseSE3& object_pose, const PoseSE3& bundle_pose);
// Object pose from a bundle observation: B * inv(T).
PoseSE3 recover_object_pose(const PoseSE3& bundle_pose, const PoseSE3& offset);
// Mean of several offset estimates: arithmetic mean translation, chordal
// mean rotation. Throws std::invalid_argument for an empty list.
PoseSE3 average_offsets(const std::vector<PoseSE3>& offsets);

// --- report ---

double median(std::vector<double> values);

struct FrameRecord {
  std::string scene;
  int frame_id = 0;
  std::string object_id;
  bool estimated = false;  // false: no estimate for this ground truth object
  double e_add = std::numeric_limits<double>::infinity();
  double e_adi = std::numeric_limits<double>::infinity();
  double e_cou = 1.0;
  double t_e = std::numeric_limits<double>::infinity();
  double r_e = std::numeric_limits<double>::infinity();
};

struct EvalSettings {
  std::vector<double> k_m = {0.1, 0.2, 0.3};
  std::vector<double> theta = {0.3, 0.5, 0.7};
  std::vector<double> iou_thresholds = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
  APSettings ap;
  bool surface_sampling = false;  // model points: vertices unless set
  int surface_points = 2000;

  void validate() const;
};

void to_json(nlohmann::json& j, const EvalSettings& s);
void from_json(const nlohmann::json& j, EvalSettings& s);

struct GroupSummary {
  std::string scene;
  std::string object_id;
  int frames = 0;
  int estimated = 0;
  double median_t_e = 0;  // over estimated records; NaN if none
  double median_r_e = 0;
  std::vector<double> adi_recall, add_recall, cou_recall;
};

struct EvalReport {
  EvalSettings settings;
  std::vector<FrameRecord> records;
  std::vector<GroupSummary> groups;  // sorted by (scene, object)
  std::map<std::string, std::vector<double>> adi_recall, add_recall, cou_recall;  // per object
  std::optional<double> map;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// diameters maps object id to model diameter (mm). Throws DataError when a
// record names an unknown object.
EvalReport aggregate_report(std::vector<FrameRecord> records,
                            const std::map<std::string, double>& diameters,
                            const EvalSettings& settings, std::optional<double> map = std::nullopt);

}  // namespace uwpose
