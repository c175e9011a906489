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

#include "uwpose/geom.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uwpose/rng.hpp"

namespace uwpose {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

}  // namespace

Rotation3 Rotation3::from_matrix(const Mat3& m, double tol) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (!(ortho <= tol) || !(std::abs(det - 1.0) <= tol)) {
    throw std::invalid_argument("matrix is not a proper rotation (residual " +
                                std::to_string(ortho) + ", det " +
                                std::to_string(det) + ")");
  }
  return Rotation3(m, Trusted{});
}

Rotation3 Rotation3::nearest(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return Rotation3(svd.matrixU() * d * svd.matrixV().transpose(), Trusted{});
}

Rotation3 Rotation3::from_axis_angle(const Vec3& axis, double angle_rad) {
  return Rotation3(Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(),
                   Trusted{});
}

Rotation3 Rotation3::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation3(q.normalized().toRotationMatrix(), Trusted{});
}

Rotation3 Rotation3::about_x_deg(double deg) {
  return from_axis_angle(Vec3::UnitX(), deg / kDegPerRad);
}

Rotation3 Rotation3::about_y_deg(double deg) {
  return from_axis_angle(Vec3::UnitY(), deg / kDegPerRad);
}

Rotation3 Rotation3::about_z_deg(double deg) {
  return from_axis_angle(Vec3::UnitZ(), deg / kDegPerRad);
}

double Rotation3::orthonormality_residual() const {
  return (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Mat4 PoseSE3::homogeneous() const {
  Mat4 h = Mat4::Identity();
  h.topLeftCorner<3, 3>() = rotation.matrix();
  h.topRightCorner<3, 1>() = translation;
  return h;
}

Vec3 transform_point(const PoseSE3& pose, const Vec3& x_model) {
  return pose.rotation.matrix() * x_model + pose.translation;
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

PoseSE3 invert(const PoseSE3& p) {
  const Rotation3 rt = p.rotation.inverse();
  return {rt, -(rt * p.translation)};
}

double geodesic_angle_deg(const Rotation3& a, const Rotation3& b) {
  const double tr = (a.matrix().transpose() * b.matrix()).trace();
  const double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * kDegPerRad;
}

Rotation3 look_at_rotation(const Vec3& view_dir) {
  const Vec3 d = view_dir.normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(d.dot(up)) > 0.999) up = Vec3::UnitY();
  const Vec3 r0 = up.cross(d).normalized();
  const Vec3 r1 = d.cross(r0);
  Mat3 m;
  m.row(0) = r0.transpose();
  m.row(1) = r1.transpose();
  m.row(2) = d.transpose();
  return Rotation3::nearest(m);
}

Rotation3 rotation_z_to(const Vec3& ray) {
  const Vec3 v = ray.normalized();
  const Vec3 axis = Vec3::UnitZ().cross(v);
  const double s = axis.norm();
  const double c = v.z();
  if (s < 1e-15) {
    return c > 0 ? Rotation3() : Rotation3::about_x_deg(180.0);
  }
  return Rotation3::from_axis_angle(axis / s, std::atan2(s, c));
}

ViewpointGrid sample_view_rotations(int n_views, int inplane_steps) {
  if (n_views < 4) throw std::invalid_argument("n_views must be >= 4");
  if (inplane_steps < 1) throw std::invalid_argument("inplane_steps must be >= 1");

  ViewpointGrid grid;
  grid.inplane_steps = inplane_steps;
  grid.directions.reserve(n_views);
  grid.rotations.reserve(static_cast<std::size_t>(n_views) * inplane_steps);

  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n_views; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n_views;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    Vec3 d(r * std::cos(phi), r * std::sin(phi), z);
    d.normalize();
    grid.directions.push_back(d);

    const Rotation3 base = look_at_rotation(d);
    for (int k = 0; k < inplane_steps; ++k) {
      const double roll = 360.0 * k / inplane_steps;
      grid.rotations.push_back(Rotation3::about_z_deg(roll) * base);
    }
  }
  return grid;
}

Rotation3 random_rotation(SeededRng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::Quaterniond q(a * std::sin(two_pi * u2), a * std::cos(two_pi * u2),
                       b * std::sin(two_pi * u3), b * std::cos(two_pi * u3));
  return Rotation3::from_quaternion(q);
}

Rotation3 random_rotation(std::uint64_t seed) {
  SeededRng rng(seed);
  return random_rotation(rng);
}

}  // namespace uwpose
