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
#include <Eigen/Geometry>
#include <cstdint>
#include <vector>

namespace uwpose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Proper rotation matrix. Construction from an arbitrary matrix is checked;
// products of valid rotations are trusted.
class Rotation3 {
 public:
  Rotation3() : m_(Mat3::Identity()) {}

  // Throws std::invalid_argument if |m^T m - I| or |det(m) - 1| exceeds tol.
  static Rotation3 from_matrix(const Mat3& m, double tol = 1e-9);
  // Nearest rotation in the Frobenius sense (SVD projection).
  static Rotation3 nearest(const Mat3& m);
  static Rotation3 from_axis_angle(const Vec3& axis, double angle_rad);
  static Rotation3 from_quaternion(const Eigen::Quaterniond& q);
  static Rotation3 about_x_deg(double deg);
  static Rotation3 about_y_deg(double deg);
  static Rotation3 about_z_deg(double deg);

  const Mat3& matrix() const { return m_; }
  Rotation3 inverse() const { return Rotation3(m_.transpose(), Trusted{}); }

  Rotation3 operator*(const Rotation3& o) const {
    return Rotation3(m_ * o.m_, Trusted{});
  }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  // Max elementwise |m^T m - I|.
  double orthonormality_residual() const;

 private:
  struct Trusted {};
  Rotation3(const Mat3& m, Trusted) : m_(m) {}

  Mat3 m_;
};

// Rigid transform model -> camera, translation in millimeters.
struct PoseSE3 {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  static PoseSE3 identity() { return {}; }
  Mat4 homogeneous() const;
};

Vec3 transform_point(const PoseSE3& pose, const Vec3& x_model);

// compose(a, b) applies b first, then a.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 invert(const PoseSE3& p);

// Geodesic distance on SO(3) in degrees, range [0, 180].
double geodesic_angle_deg(const Rotation3& a, const Rotation3& b);

// Rotation whose third row is `view_dir`, i.e. it maps the object-frame
// viewing direction onto the camera's +z axis.
Rotation3 look_at_rotation(const Vec3& view_dir);

// Minimal rotation taking +z onto the unit vector `ray`.
Rotation3 rotation_z_to(const Vec3& ray);

struct ViewpointGrid {
  std::vector<Vec3> directions;
  int inplane_steps = 1;
  // Ordered direction-major: index = dir * inplane_steps + roll.
  std::vector<Rotation3> rotations;
};

// Fibonacci-spiral view sphere crossed with equally spaced in-plane rolls.
// Deterministic; throws std::invalid_argument if n_views < 4 or
// inplane_steps < 1.
ViewpointGrid sample_view_rotations(int n_views, int inplane_steps);

// Haar-uniform rotation (Shoemake's quaternion construction), deterministic
// per seed.
Rotation3 random_rotation(std::uint64_t seed);

class SeededRng;
Rotation3 random_rotation(SeededRng& rng);

}  // namespace uwpose
