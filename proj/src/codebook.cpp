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

#include "uwpose/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"
#include "uwpose/error.hpp"

namespace uwpose {

namespace {

constexpr char kCodebookMagic[9] = "UWPCBK01";
constexpr std::uint32_t kCodebookVersion = 1;

}  // namespace

void Codebook::validate() const {
  const auto n = static_cast<Eigen::Index>(rotations.size());
  if (codes.rows() != n || bbox_diagonals.size() != rotations.size()) {
    throw std::invalid_argument("codebook arrays have inconsistent lengths");
  }
  if (codes.cols() < 1) throw std::invalid_argument("codebook has no latent dimensions");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(codes.row(i).cast<double>().norm() - 1.0) > 1e-6) {
      throw std::invalid_argument("codebook row " + std::to_string(i) + " is not unit norm");
    }
  }
  for (double d : bbox_diagonals) {
    if (!(d > 0)) throw std::invalid_argument("codebook diagonal must be positive");
  }
  if (!(render_distance > 0)) throw std::invalid_argument("render_distance must be positive");
  render_cam.validate();
}

Codebook build_codebook(const std::string& object_id, const TriMesh& mesh,
                        const EncoderParams& params, const ViewpointGrid& grid,
                        const CameraIntrinsics& render_cam, double render_distance,
                        const CropSettings& crop, const RenderStyle& style) {
  if (!(render_distance > 0)) throw std::invalid_argument("render_distance must be positive");
  render_cam.validate();
  Network<float> net(params);
  Codebook cb;
  cb.object_id = object_id;
  cb.render_distance = render_distance;
  cb.render_cam = render_cam;
  cb.crop = crop;
  const auto n = static_cast<Eigen::Index>(grid.rotations.size());
  cb.codes.resize(n, params.arch.latent_dim);
  cb.rotations = grid.rotations;
  cb.bbox_diagonals.resize(grid.rotations.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const PoseSE3 pose{grid.rotations[i], Vec3(0, 0, render_distance)};
    const RenderOutput r = render(mesh, pose, render_cam, style);
    if (!r.valid) throw DataError("codebook view " + std::to_string(i) + " renders empty");
    const Eigen::VectorXf z = net.encode(crop_square(r.color, r.bbox, crop.pad_factor, crop.size));
    const float norm = z.norm();
    if (!(norm > 0) || !std::isfinite(norm)) {
      throw DataError("codebook view " + std::to_string(i) + " encodes to a zero code");
    }
    cb.codes.row(i) = (z / norm).transpose();
    cb.bbox_diagonals[i] = r.bbox.diagonal();
  }
  return cb;
}

std::vector<Match> lookup(const Codebook& cb, const Eigen::VectorXf& query, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (query.size() != cb.codes.cols()) throw std::invalid_argument("query has wrong latent size");
  const float norm = query.norm();
  if (!(norm > 0)) throw std::invalid_argument("query code is zero");
  const Eigen::VectorXf sims = cb.codes * (query / norm);

  std::vector<std::size_t> order(static_cast<std::size_t>(sims.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    const float sa = sims[static_cast<Eigen::Index>(a)];
    const float sb = sims[static_cast<Eigen::Index>(b)];
    return sa > sb || (sa == sb && a < b);
  };
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                    better);
  std::vector<Match> out;
  out.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i) {
    out.push_back({order[i], static_cast<double>(sims[static_cast<Eigen::Index>(order[i])])});
  }
  return out;
}

Vec3 estimate_translation(const Codebook& cb, std::size_t match_index, const BBox& detected,
                          const CameraIntrinsics& test_cam) {
  if (match_index >= cb.size()) throw std::out_of_range("codebook index out of range");
  if (detected.empty()) throw std::invalid_argument("detected bbox is empty");
  const double diag = detected.diagonal();
  if (!(diag > 0)) throw std::invalid_argument("detected bbox has zero diagonal");
  const double tz = cb.render_distance * (cb.bbox_diagonals[match_index] / diag) *
                    (test_cam.mean_focal() / cb.render_cam.mean_focal());
  return {(detected.center_x() - test_cam.cx) * tz / test_cam.fx,
          (detected.center_y() - test_cam.cy) * tz / test_cam.fy, tz};
}

PoseEstimator::PoseEstimator(const EncoderParams& params, const Codebook& codebook)
    : net_(params), codebook_(codebook) {
  if (params.arch.latent_dim != codebook.latent_dim()) {
    throw DataError("encoder latent size " + std::to_string(params.arch.latent_dim) +
                    " does not match codebook latent size " +
                    std::to_string(codebook.latent_dim()));
  }
}

Eigen::VectorXf PoseEstimator::encode_crop(const Image& crop) { return net_.encode(crop); }

PoseEstimate PoseEstimator::estimate(const Image& image, const BBox& bbox,
                                     const CameraIntrinsics& cam, const EstimateOptions& options) {
  if (bbox.empty()) throw std::invalid_argument("detection bbox is empty");
  const CropSettings& cs = codebook_.crop;
  const Image crop = crop_square(image, bbox, cs.pad_factor, cs.size);
  const Match m = lookup(codebook_, encode_crop(crop), 1).front();

  PoseEstimate est;
  est.object_id = codebook_.object_id;
  est.codebook_index = m.index;
  est.similarity = m.similarity;
  est.pose.translation = estimate_translation(codebook_, m.index, bbox, cam);
  est.pose.rotation = codebook_.rotations[m.index];
  if (options.ray_correction) {
    const Vec3 ray((bbox.center_x() - cam.cx) / cam.fx, (bbox.center_y() - cam.cy) / cam.fy, 1.0);
    est.pose.rotation = rotation_z_to(ray) * est.pose.rotation;
  }
  return est;
}

PoseEstimate estimate_pose(const Image& image, const Detection& detection,
                           const EncoderParams& params, const Codebook& codebook,
                           const CameraIntrinsics& test_cam, const EstimateOptions& options) {
  PoseEstimator est(params, codebook);
  return est.estimate(image, detection.bbox, test_cam, options);
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  cb.validate();
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write codebook " + path.string());
    out.write(kCodebookMagic, 8);
    detail::put_u32(out, kCodebookVersion);
    detail::put_bytes(out, cb.object_id);
    detail::put_u64(out, cb.size());
    detail::put_u32(out, static_cast<std::uint32_t>(cb.latent_dim()));
    detail::put_f64(out, cb.render_distance);
    const CameraIntrinsics& c = cb.render_cam;
    for (double v : {c.fx, c.fy, c.cx, c.cy}) detail::put_f64(out, v);
    detail::put_u32(out, static_cast<std::uint32_t>(c.width));
    detail::put_u32(out, static_cast<std::uint32_t>(c.height));
    detail::put_f64(out, cb.crop.pad_factor);
    detail::put_u32(out, static_cast<std::uint32_t>(cb.crop.size));
    for (Eigen::Index i = 0; i < cb.codes.size(); ++i) detail::put_f32(out, cb.codes.data()[i]);
    for (const Rotation3& r : cb.rotations) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) detail::put_f64(out, r.matrix()(a, b));
      }
    }
    for (double d : cb.bbox_diagonals) detail::put_f64(out, d);
    if (!out) throw DataError("failed writing codebook " + path.string());
  }
  const nlohmann::json manifest = {
      {"format", "uwpose-codebook"},
      {"version", kCodebookVersion},
      {"object_id", cb.object_id},
      {"n", cb.size()},
      {"latent_dim", cb.latent_dim()},
      {"render_distance", cb.render_distance},
      {"camera",
       {{"fx", cb.render_cam.fx}, {"fy", cb.render_cam.fy}, {"cx", cb.render_cam.cx},
        {"cy", cb.render_cam.cy}, {"width", cb.render_cam.width}, {"height", cb.render_cam.height}}},
      {"crop", {{"pad_factor", cb.crop.pad_factor}, {"size", cb.crop.size}}}};
  std::ofstream js(path.string() + ".json");
  js << manifest.dump(2) << '\n';
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open codebook " + path.string());
  detail::expect_magic(in, kCodebookMagic, path.string());
  const std::uint32_t version = detail::get_u32(in);
  if (version != kCodebookVersion) {
    throw DataError(path.string() + ": unsupported codebook version " + std::to_string(version));
  }
  Codebook cb;
  cb.object_id = detail::get_bytes(in, 4096);
  const std::uint64_t n = detail::get_u64(in);
  const std::uint32_t l = detail::get_u32(in);
  if (n > (1ULL << 26) || l == 0 || l > 65536) throw DataError(path.string() + ": corrupt header");
  cb.render_distance = detail::get_f64(in);
  cb.render_cam.fx = detail::get_f64(in);
  cb.render_cam.fy = detail::get_f64(in);
  cb.render_cam.cx = detail::get_f64(in);
  cb.render_cam.cy = detail::get_f64(in);
  cb.render_cam.width = static_cast<int>(detail::get_u32(in));
  cb.render_cam.height = static_cast<int>(detail::get_u32(in));
  cb.crop.pad_factor = detail::get_f64(in);
  cb.crop.size = static_cast<int>(detail::get_u32(in));
  cb.codes.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l));
  for (Eigen::Index i = 0; i < cb.codes.size(); ++i) cb.codes.data()[i] = detail::get_f32(in);
  cb.rotations.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Mat3 m;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) m(a, b) = detail::get_f64(in);
    }
    try {
      cb.rotations.push_back(Rotation3::from_matrix(m));
    } catch (const std::invalid_argument&) {
      throw DataError(path.string() + ": rotation " + std::to_string(i) + " is not orthonormal");
    }
  }
  cb.bbox_diagonals.resize(n);
  for (auto& d : cb.bbox_diagonals) d = detail::get_f64(in);
  try {
    cb.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return cb;
}

}  // namespace uwpose
