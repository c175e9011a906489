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

#include <array>

#include "uwpose/geom.hpp"
#include "uwpose/image.hpp"
#include "uwpose/mesh.hpp"

namespace uwpose {

struct CameraIntrinsics {
  double fx = 600, fy = 600;
  double cx = 320, cy = 240;
  int width = 640, height = 480;

  // Throws std::invalid_argument when the intrinsics are inconsistent.
  void validate() const;
  double mean_focal() const { return 0.5 * (fx + fy); }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// Pinhole projection u = fx x / z + cx, v = fy y / z + cy.
// Throws std::domain_error for z <= 0.
Vec2 project(const Vec3& x_camera, const CameraIntrinsics& cam);

// Fixed appearance model: one directional light in the camera frame,
// Lambertian per-face shading, single albedo.
struct RenderStyle {
  std::array<float, 3> albedo = {0.85f, 0.55f, 0.2f};
  Vec3 light_dir = Vec3(-0.4, -0.6, -1.0);  // direction towards the light
  float ambient = 0.25f;
};

struct RenderOutput {
  Image color;  // black where the mesh is absent
  Mask mask;
  BBox bbox;
  bool valid = false;
};

// Z-buffered rasterization sampled at pixel centers with a top-left fill
// rule. Triangles with any vertex closer than 1 mm to the camera plane are
// skipped; degenerate triangles are skipped silently.
RenderOutput render(const TriMesh& mesh, const PoseSE3& pose, const CameraIntrinsics& cam,
                    const RenderStyle& style = {});

// Square window centered on the bbox center with side
// pad_factor * max(w, h), resampled bilinearly to out_size x out_size.
// Pixels outside the source image are zero. Throws on an empty bbox.
Image crop_square(const Image& image, const BBox& bbox, double pad_factor, int out_size);

}  // namespace uwpose
