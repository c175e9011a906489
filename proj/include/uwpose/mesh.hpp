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
#include <filesystem>
#include <string>
#include <vector>

#include "uwpose/geom.hpp"

namespace uwpose {

// Triangle mesh in the model frame, millimeters.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  double diameter = 0.0;

  // Validates indices and sizes and computes the diameter.
  static TriMesh create(std::vector<Vec3> vertices,
                        std::vector<std::array<int, 3>> faces);
};

// Max pairwise vertex distance, exact O(n^2) scan.
double mesh_diameter(const std::vector<Vec3>& points);
inline double mesh_diameter(const TriMesh& mesh) { return mesh_diameter(mesh.vertices); }

// OBJ ("v"/"f" lines; quads are fan-triangulated, larger polygons rejected)
// or ASCII PLY. Throws ParseError with a line number on malformed input.
TriMesh load_mesh(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text, const std::string& name = "<obj>");
TriMesh parse_ply(const std::string& text, const std::string& name = "<ply>");
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

// Procedural fixtures, all centered on the origin.
TriMesh make_box(double sx, double sy, double sz);
// `segments` vertices per rim, 2 * segments total, no center vertices.
TriMesh make_cylinder(double radius, double height, int segments);
// Unequal-armed L block with a corner bump; no rotational symmetry.
TriMesh make_l_block();

// Resolves "builtin:<name>" (box, cylinder, l_block) or a mesh file path.
TriMesh mesh_from_spec(const std::string& spec,
                       const std::filesystem::path& base_dir = {});

}  // namespace uwpose
