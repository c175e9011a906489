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

#include "uwpose/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uwpose {

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
  if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height)) {
    throw std::invalid_argument("principal point outside the image");
  }
}

Vec2 project(const Vec3& x_camera, const CameraIntrinsics& cam) {
  if (!(x_camera.z() > 0)) throw std::domain_error("cannot project a point with z <= 0");
  return {cam.fx * x_camera.x() / x_camera.z() + cam.cx,
          cam.fy * x_camera.y() / x_camera.z() + cam.cy};
}

namespace {

constexpr double kNearPlane = 1.0;  // mm

double edge(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

bool owns_edge(const Vec2& a, const Vec2& b) {
  const double dy = b.y() - a.y();
  const double dx = b.x() - a.x();
  return dy > 0 || (dy == 0 && dx < 0);
}

bool covers(double w, bool owned) { return w > 0 || (w == 0 && owned); }

}  // namespace

RenderOutput render(const TriMesh& mesh, const PoseSE3& pose, const CameraIntrinsics& cam,
                    const RenderStyle& style) {
  cam.validate();
  RenderOutput out;
  out.color = Image(cam.width, cam.height, 3, 0.0f);
  out.mask = Mask(cam.width, cam.height);

  std::vector<Vec3> xc(mesh.vertices.size());
  bool any_in_front = false;
  for (std::size_t i = 0; i < xc.size(); ++i) {
    xc[i] = transform_point(pose, mesh.vertices[i]);
    any_in_front = any_in_front || xc[i].z() > 0;
  }
  if (!any_in_front) return out;

  const Vec3 light = style.light_dir.normalized();
  std::vector<double> zbuf(static_cast<std::size_t>(cam.width) * cam.height,
                           std::numeric_limits<double>::infinity());

  for (const auto& face : mesh.faces) {
    const Vec3& p0 = xc[face[0]];
    const Vec3& p1 = xc[face[1]];
    const Vec3& p2 = xc[face[2]];
    if (p0.z() < kNearPlane || p1.z() < kNearPlane || p2.z() < kNearPlane) continue;

    Vec3 n = (p1 - p0).cross(p2 - p0);
    const double n_len = n.norm();
    if (!(n_len > 0)) continue;
    n /= n_len;
    if (n.dot(p0) > 0) n = -n;
    const float shade = style.ambient +
                        (1.0f - style.ambient) * static_cast<float>(std::max(0.0, n.dot(light)));

    Vec2 s[3] = {project(p0, cam), project(p1, cam), project(p2, cam)};
    double inv_z[3] = {1.0 / p0.z(), 1.0 / p1.z(), 1.0 / p2.z()};
    double area = edge(s[0], s[1], s[2].x(), s[2].y());
    if (std::abs(area) < 1e-12) continue;
    if (area < 0) {
      std::swap(s[1], s[2]);
      std::swap(inv_z[1], inv_z[2]);
      area = -area;
    }
    const bool own0 = owns_edge(s[1], s[2]);
    const bool own1 = owns_edge(s[2], s[0]);
    const bool own2 = owns_edge(s[0], s[1]);

    const double min_u = std::min({s[0].x(), s[1].x(), s[2].x()});
    const double max_u = std::max({s[0].x(), s[1].x(), s[2].x()});
    const double min_v = std::min({s[0].y(), s[1].y(), s[2].y()});
    const double max_v = std::max({s[0].y(), s[1].y(), s[2].y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(min_u - 0.5)));
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(max_u - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_v - 0.5)));
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(max_v - 0.5)));

    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = edge(s[1], s[2], px, py);
        const double w1 = edge(s[2], s[0], px, py);
        const double w2 = edge(s[0], s[1], px, py);
        if (!covers(w0, own0) || !covers(w1, own1) || !covers(w2, own2)) continue;
        const double iz = (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]) / area;
        const double z = 1.0 / iz;
        double& zb = zbuf[static_cast<std::size_t>(y) * cam.width + x];
        if (!(z < zb)) continue;
        zb = z;
        out.mask.at(x, y) = 1;
        for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = style.albedo[c] * shade;
      }
    }
  }

  out.bbox = mask_bbox(out.mask);
  out.valid = !out.bbox.empty();
  return out;
}

Image crop_square(const Image& image, const BBox& bbox, double pad_factor, int out_size) {
  if (bbox.empty()) throw std::invalid_argument("crop_square: empty bbox");
  if (out_size <= 0 || !(pad_factor > 0)) throw std::invalid_argument("crop_square: bad size");
  const double side = pad_factor * std::max(bbox.width(), bbox.height());
  const double x0 = bbox.center_x() - side / 2;
  const double y0 = bbox.center_y() - side / 2;
  const double step = side / out_size;
  // Box-filter when shrinking so large detections are not aliased.
  const int sub = std::max(1, static_cast<int>(std::ceil(step - 1e-9)));
  const double inv = 1.0 / (sub * sub);

  Image out(out_size, out_size, image.channels, 0.0f);
  for (int j = 0; j < out_size; ++j) {
    for (int i = 0; i < out_size; ++i) {
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0.0;
        for (int sj = 0; sj < sub; ++sj) {
          const double y = y0 + (j + (sj + 0.5) / sub) * step;
          for (int si = 0; si < sub; ++si) {
            const double x = x0 + (i + (si + 0.5) / sub) * step;
            acc += sample_bilinear(image, x, y, c);
          }
        }
        out.at(i, j, c) = static_cast<float>(acc * inv);
      }
    }
  }
  return out;
}

}  // namespace uwpose
