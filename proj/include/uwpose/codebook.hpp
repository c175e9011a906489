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

#include <Eigen/Core>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "uwpose/detection.hpp"
#include "uwpose/encoder.hpp"
#include "uwpose/geom.hpp"
#include "uwpose/render.hpp"

namespace uwpose {

struct Codebook {
  using Codes = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  std::string object_id;
  Codes codes;  // n x l, unit rows
  std::vector<Rotation3> rotations;
  std::vector<double> bbox_diagonals;  // px, rendered at render_distance
  double render_distance = 0;          // mm
  CameraIntrinsics render_cam;
  CropSettings crop;

  std::size_t size() const { return rotations.size(); }
  int latent_dim() const { return static_cast<int>(codes.cols()); }

  // Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

// Renders every grid rotation at (0, 0, render_distance), crops, encodes and
// L2-normalizes. Row i corresponds to grid.rotations[i].
Codebook build_codebook(const std::string& object_id, const TriMesh& mesh,
                        const EncoderParams& params, const ViewpointGrid& grid,
                        const CameraIntrinsics& render_cam, double render_distance,
                        const CropSettings& crop = {}, const RenderStyle& style = {});

struct Match {
  std::size_t index = 0;
  double similarity = 0;
};

// Top-k cosine matches, best first; equal similarities keep the lower index
// first. Throws std::invalid_argument for a zero query or k < 1.
std::vector<Match> lookup(const Codebook& cb, const Eigen::VectorXf& query, int k = 1);

// Pinhole translation from the matched view's rendered diagonal and the
// detected box.
Vec3 estimate_translation(const Codebook& cb, std::size_t match_index, const BBox& detected,
                          const CameraIntrinsics& test_cam);

struct PoseEstimate {
  PoseSE3 pose;
  double similarity = 0;
  std::size_t codebook_index = 0;
  std::string object_id;
};

struct EstimateOptions {
  // Rotate the retrieved orientation from the optical axis onto the viewing
  // ray through the box center.
  bool ray_correction = true;
};

// Holds a float network so repeated estimates skip weight conversion.
// Not thread-safe; use one instance per thread.
class PoseEstimator {
 public:
  PoseEstimator(const EncoderParams& params, const Codebook& codebook);

  const Codebook& codebook() const { return codebook_; }

  Eigen::VectorXf encode_crop(const Image& crop);
  PoseEstimate estimate(const Image& image, const BBox& bbox, const CameraIntrinsics& cam,
                        const EstimateOptions& options = {});

 private:
  Network<float> net_;
  const Codebook& codebook_;
};

PoseEstimate estimate_pose(const Image& image, const Detection& detection,
                           const EncoderParams& params, const Codebook& codebook,
                           const CameraIntrinsics& test_cam, const EstimateOptions& options = {});

// Binary container plus "<path>.json" manifest.
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace uwpose
