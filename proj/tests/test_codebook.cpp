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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "uwpose/codebook.hpp"
#include "uwpose/error.hpp"
#include "uwpose/mesh.hpp"

using namespace uwpose;

namespace {

Codebook manual_codebook(const Codebook::Codes& raw) {
  Codebook cb;
  cb.object_id = "toy";
  cb.codes = raw;
  for (Eigen::Index i = 0; i < cb.codes.rows(); ++i) cb.codes.row(i).normalize();
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    cb.rotations.push_back(random_rotation(static_cast<std::uint64_t>(i)));
    cb.bbox_diagonals.push_back(100.0 + static_cast<double>(i));
  }
  cb.render_distance = 1000;
  return cb;
}

Codebook::Codes random_codes(int n, int l, std::uint64_t seed) {
  SeededRng rng(seed);
  Codebook::Codes c(n, l);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = static_cast<float>(rng.uniform(-1, 1));
  return c;
}

ViewpointGrid grid_from(std::vector<Rotation3> rots) {
  ViewpointGrid g;
  for (const auto& r : rots) g.directions.push_back(r.matrix().row(2).transpose());
  g.inplane_steps = 1;
  g.rotations = std::move(rots);
  return g;
}

const EncoderParams& small_encoder() {
  static const EncoderParams p = EncoderParams::init(Architecture::default_conv(16, 32), 9);
  return p;
}

const CropSettings kSmallCrop{1.2, 32};

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "uwpose_codebook_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(BuildCodebook, SmallGridInvariantsAndDeterminism) {
  const TriMesh m = make_l_block();
  const ViewpointGrid g = sample_view_rotations(4, 1);
  const CameraIntrinsics cam;
  const Codebook a = build_codebook("l_block", m, small_encoder(), g, cam, 1000, kSmallCrop);
  EXPECT_EQ(a.size(), 4u);
  EXPECT_NO_THROW(a.validate());
  for (Eigen::Index i = 0; i < a.codes.rows(); ++i) EXPECT_NEAR(a.codes.row(i).norm(), 1.0, 1e-6);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.rotations[i].matrix(), g.rotations[i].matrix());
    EXPECT_GT(a.bbox_diagonals[i], 0);
  }
  const Codebook b = build_codebook("l_block", m, small_encoder(), g, cam, 1000, kSmallCrop);
  EXPECT_EQ(a.codes, b.codes);
  EXPECT_EQ(a.bbox_diagonals, b.bbox_diagonals);
}

TEST(BuildCodebook, CubeFaceOnViewsHaveEqualDiagonals) {
  const TriMesh cube = make_box(100, 100, 100);
  std::vector<Rotation3> rots;
  for (double deg : {0.0, 90.0, 180.0, 270.0}) rots.push_back(Rotation3::about_y_deg(deg));
  const Codebook cb = build_codebook("cube", cube, small_encoder(), grid_from(rots), {}, 800, kSmallCrop);
  const auto [lo, hi] = std::minmax_element(cb.bbox_diagonals.begin(), cb.bbox_diagonals.end());
  EXPECT_LE(*hi - *lo, 1.0);
}

TEST(BuildCodebook, InvalidRenderNamesIndex) {
  const ViewpointGrid g = sample_view_rotations(4, 1);
  try {
    // Far enough away to cover no pixel center.
    build_codebook("l_block", make_l_block(), small_encoder(), g, {}, 1e7, kSmallCrop);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("view 0"), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_codebook("l_block", make_l_block(), small_encoder(), g, {}, -5, kSmallCrop),
               std::invalid_argument);
}

TEST(Lookup, SelfSimilarity) {
  const Codebook cb = manual_codebook(random_codes(20, 8, 1));
  const auto m = lookup(cb, cb.codes.row(7).transpose());
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].index, 7u);
  EXPECT_NEAR(m[0].similarity, 1.0, 1e-6);
}

TEST(Lookup, OrthogonalQueryGivesZeros) {
  Codebook::Codes c = random_codes(10, 6, 2);
  c.col(5).setZero();
  const Codebook cb = manual_codebook(c);
  Eigen::VectorXf q = Eigen::VectorXf::Zero(6);
  q[5] = 2.0f;
  for (const auto& m : lookup(cb, q, 10)) EXPECT_EQ(m.similarity, 0.0);
}

TEST(Lookup, MatchesBruteForceOrder) {
  const Codebook cb = manual_codebook(random_codes(100, 16, 3));
  SeededRng rng(4);
  Eigen::VectorXf q(16);
  for (Eigen::Index i = 0; i < 16; ++i) q[i] = static_cast<float>(rng.uniform(-1, 1));
  const Eigen::VectorXf qn = q / q.norm();

  std::vector<std::pair<float, std::size_t>> ref;
  for (Eigen::Index i = 0; i < 100; ++i) {
    float s = 0;
    for (Eigen::Index j = 0; j < 16; ++j) s += cb.codes(i, j) * qn[j];
    ref.emplace_back(s, static_cast<std::size_t>(i));
  }
  std::stable_sort(ref.begin(), ref.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  const auto got = lookup(cb, q, 100);
  ASSERT_EQ(got.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(got[i].index, ref[i].second);
    EXPECT_NEAR(got[i].similarity, ref[i].first, 1e-5);
  }
}

TEST(Lookup, TiesKeepLowerIndex) {
  Codebook::Codes c = random_codes(6, 4, 5);
  c.row(4) = c.row(1);
  c.row(2) = c.row(1);
  const Codebook cb = manual_codebook(c);
  const auto m = lookup(cb, cb.codes.row(1).transpose(), 3);
  EXPECT_EQ(m[0].index, 1u);
  EXPECT_EQ(m[1].index, 2u);
  EXPECT_EQ(m[2].index, 4u);
}

TEST(Lookup, ScaleInvariantAndRejectsBadQueries) {
  const Codebook cb = manual_codebook(random_codes(30, 8, 6));
  const Eigen::VectorXf q = random_codes(1, 8, 7).row(0).transpose();
  const auto a = lookup(cb, q, 5);
  const auto b = lookup(cb, 37.5f * q, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].index, b[i].index);
    EXPECT_NEAR(a[i].similarity, b[i].similarity, 1e-6);
  }
  EXPECT_THROW(lookup(cb, Eigen::VectorXf::Zero(8)), std::invalid_argument);
  EXPECT_THROW(lookup(cb, q, 0), std::invalid_argument);
  EXPECT_THROW(lookup(cb, Eigen::VectorXf::Ones(5)), std::invalid_argument);
  EXPECT_EQ(lookup(cb, q, 100).size(), 30u);
}

TEST(EstimateTranslation, IdentityAndInverseProportionality) {
  Codebook cb = manual_codebook(random_codes(3, 4, 8));
  const CameraIntrinsics cam = cb.render_cam;
  const double d = cb.bbox_diagonals[1];
  const double side = d / std::sqrt(2.0);
  const BBox same{cam.cx - side / 2, cam.cy - side / 2, cam.cx + side / 2, cam.cy + side / 2};
  const Vec3 t = estimate_translation(cb, 1, same, cam);
  EXPECT_NEAR(t.x(), 0, 1e-6);
  EXPECT_NEAR(t.y(), 0, 1e-6);
  EXPECT_NEAR(t.z(), 1000, 1e-6);

  const BBox half{cam.cx - side / 4, cam.cy - side / 4, cam.cx + side / 4, cam.cy + side / 4};
  EXPECT_NEAR(estimate_translation(cb, 1, half, cam).z(), 2000, 1e-6);
}

TEST(EstimateTranslation, FocalRatioAndOffCenter) {
  Codebook cb = manual_codebook(random_codes(1, 4, 9));
  CameraIntrinsics test;
  test.fx = 900;
  test.fy = 700;
  test.cx = 300;
  test.cy = 250;
  const BBox box{400, 100, 460, 180};  // diagonal 100
  const Vec3 t = estimate_translation(cb, 0, box, test);
  const double tz = 1000 * (100.0 / 100.0) * (800.0 / 600.0);
  EXPECT_NEAR(t.z(), tz, 1e-9);
  EXPECT_NEAR(t.x(), (430 - 300) * tz / 900, 1e-9);
  EXPECT_NEAR(t.y(), (140 - 250) * tz / 700, 1e-9);
  EXPECT_THROW(estimate_translation(cb, 0, BBox{5, 5, 5, 9}, test), std::invalid_argument);
  EXPECT_THROW(estimate_translation(cb, 3, box, test), std::out_of_range);
}

// Property: a smaller detected box always moves the object further away.
TEST(EstimateTranslation, MonotoneInDiagonal) {
  const Codebook cb = manual_codebook(random_codes(1, 4, 10));
  double prev = 0;
  for (double s = 200; s >= 10; s -= 7) {
    const double z = estimate_translation(cb, 0, {100, 100, 100 + s, 100 + 0.7 * s}, {}).z();
    EXPECT_GT(z, prev);
    prev = z;
  }
}

TEST(EstimateTranslation, RenderThenRecoverCube) {
  const TriMesh cube = make_box(100, 100, 100);
  const CameraIntrinsics cam;
  const Codebook cb =
      build_codebook("cube", cube, small_encoder(), grid_from({Rotation3()}), cam, 1000, kSmallCrop);
  const Vec3 truth(40, -30, 900);
  const RenderOutput r = render(cube, {Rotation3(), truth}, cam);
  const Vec3 t = estimate_translation(cb, 0, r.bbox, cam);
  EXPECT_LT((t - truth).norm(), 0.05 * truth.z());
}

TEST(PoseEstimator, RayCorrectionAlignsWithViewingRay) {
  const TriMesh m = make_l_block();
  const CameraIntrinsics cam;
  const Rotation3 r0 = random_rotation(std::uint64_t{12});
  const Codebook cb = build_codebook("l_block", m, small_encoder(), grid_from({r0}), cam, 1000, kSmallCrop);
  PoseEstimator est(small_encoder(), cb);

  // Same object-to-ray relation at the image center and near a corner.
  const Vec3 ray = Vec3(-0.35, -0.25, 1.0);
  const PoseSE3 corner{rotation_z_to(ray) * r0, ray.normalized() * 1200};
  const RenderOutput rc = render(m, corner, cam);
  ASSERT_TRUE(rc.valid);
  const PoseEstimate with = est.estimate(rc.color, rc.bbox, cam);
  const PoseEstimate without = est.estimate(rc.color, rc.bbox, cam, {false});
  EXPECT_EQ(without.pose.rotation.matrix(), r0.matrix());
  EXPECT_LT(geodesic_angle_deg(with.pose.rotation, corner.rotation), 5.0);
  EXPECT_GT(geodesic_angle_deg(without.pose.rotation, corner.rotation), 15.0);
  EXPECT_EQ(with.object_id, "l_block");
  EXPECT_THROW(est.estimate(rc.color, BBox{3, 3, 3, 3}, cam), std::invalid_argument);
}

TEST(PoseEstimator, LatentSizeMismatchIsDataError) {
  const Codebook cb = manual_codebook(random_codes(2, 8, 1));
  EXPECT_THROW(PoseEstimator(small_encoder(), cb), DataError);
}

TEST(CodebookFile, RoundTripIsBitExact) {
  const Codebook a = build_codebook("l_block", make_l_block(), small_encoder(),
                                    sample_view_rotations(6, 2), {}, 900, kSmallCrop);
  const auto path = temp_path("rt.codebook");
  save_codebook(a, path);
  ASSERT_TRUE(std::filesystem::exists(path.string() + ".json"));
  const Codebook b = load_codebook(path);
  EXPECT_EQ(b.object_id, a.object_id);
  EXPECT_EQ(b.codes, a.codes);
  EXPECT_EQ(b.bbox_diagonals, a.bbox_diagonals);
  EXPECT_EQ(b.render_distance, a.render_distance);
  EXPECT_EQ(b.render_cam, a.render_cam);
  EXPECT_EQ(b.crop.size, a.crop.size);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b.rotations[i].matrix(), a.rotations[i].matrix());
}

TEST(CodebookFile, CorruptOrMissingIsDataError) {
  EXPECT_THROW(load_codebook(temp_path("nothing.codebook")), DataError);
  const auto path = temp_path("trunc.codebook");
  save_codebook(manual_codebook(random_codes(4, 4, 2)), path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 9);
  EXPECT_THROW(load_codebook(path), DataError);
}
