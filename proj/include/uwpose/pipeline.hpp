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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uwpose/codebook.hpp"
#include "uwpose/config.hpp"
#include "uwpose/eval.hpp"
#include "uwpose/io.hpp"

namespace uwpose {

// Renders the training views of one object (Haar-random rotations drawn
// from seed) and trains its encoder on procedural backgrounds.
TrainResult train_object(const ObjectConfig& object, const TriMesh& mesh,
                         const CameraIntrinsics& cam, int background_count, std::uint64_t seed,
                         const TrainProgress& progress = {});

Codebook build_object_codebook(const ObjectConfig& object, const TriMesh& mesh,
                               const EncoderParams& params, const CameraIntrinsics& cam);

enum class DetectionSource { kGroundTruth, kNaive, kFile };
DetectionSource parse_detection_source(const std::string& name);

struct EstimateRecord {
  std::string scene;
  int frame_id = 0;
  Detection detection;
  std::optional<PoseEstimate> estimate;
  std::string error;  // set when no estimate could be made
};

struct StageTimes {
  std::vector<double> detect_ms;
  std::vector<double> estimate_ms;
};

struct PipelineResult {
  std::vector<EstimateRecord> records;
  StageTimes timing;
};

using EstimatorMap = std::map<std::string, std::unique_ptr<PoseEstimator>>;

// Frames are processed in dataset order. A detection whose class has no
// estimator yields a record with an error message.
PipelineResult run_pipeline(const SceneDataset& ds, EstimatorMap& estimators,
                            DetectionSource source, const DetectorConfig& detector,
                            const EstimateOptions& options = {});

nlohmann::json estimates_to_json(const std::vector<EstimateRecord>& records);
std::vector<EstimateRecord> estimates_from_json(const nlohmann::json& j);
nlohmann::json timing_to_json(const StageTimes& t);

// Matches estimates to ground truth objects per frame (same class, highest
// box IoU first) and computes every pose metric. Ground truth poses come
// from gt.json or, when absent, from the bundle pose and the object's
// bundle offset.
EvalReport evaluate_poses(const SceneDataset& ds, const std::vector<EstimateRecord>& records,
                          const EvalSettings& settings);

struct DetectionReport {
  double map = 0;
  std::map<std::string, std::vector<double>> ap;  // class -> AP per threshold
  EvalSettings settings;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

DetectionReport evaluate_detections(const SceneDataset& ds, const std::vector<Detection>& dets,
                                    const EvalSettings& settings);

// Detections of a dataset flattened across scenes. Frame ids are made
// unique across scenes by adding scene_index * stride.
std::vector<Detection> flatten_detections(const SceneDataset& ds,
                                          const std::vector<EstimateRecord>& records);
std::vector<GTAnnotation> flatten_gt(const SceneDataset& ds);

// Nearest-rank percentile (q in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

struct LatencyStats {
  std::string name;
  int samples = 0;
  double p50 = 0, p90 = 0, p99 = 0, mean = 0;  // ms
};

// Times fn() iterations + 1 times and drops the first call.
LatencyStats measure_latency(const std::string& name, int iterations,
                             const std::function<void()>& fn);

}  // namespace uwpose
