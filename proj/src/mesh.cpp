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

#include "uwpose/mesh.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "uwpose/error.hpp"

namespace uwpose {

TriMesh TriMesh::create(std::vector<Vec3> vertices,
                        std::vector<std::array<int, 3>> faces) {
  if (vertices.size() < 4) throw DataError("mesh needs at least 4 vertices");
  if (faces.empty()) throw DataError("mesh needs at least 1 face");
  const int n = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int idx : faces[f]) {
      if (idx < 0 || idx >= n) {
        throw DataError("face " + std::to_string(f) + " index " + std::to_string(idx) +
                        " out of range for " + std::to_string(n) + " vertices");
      }
    }
  }
  TriMesh m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  m.diameter = mesh_diameter(m.vertices);
  if (!(m.diameter > 0)) throw DataError("mesh has zero diameter");
  return m;
}

double mesh_diameter(const std::vector<Vec3>& points) {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      best = std::max(best, (points[i] - points[j]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& name, int line) {
  double v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(name, line, "invalid number '" + tok + "'");
  }
  return v;
}

long parse_long(const std::string& tok, const std::string& name, int line) {
  long v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(name, line, "invalid integer '" + tok + "'");
  }
  return v;
}

void add_polygon(std::vector<std::array<int, 3>>& faces, const std::vector<int>& poly,
                 const std::string& name, int line) {
  if (poly.size() < 3) throw ParseError(name, line, "face with fewer than 3 vertices");
  if (poly.size() > 4) {
    throw ParseError(name, line, std::to_string(poly.size()) + "-gon faces are not supported");
  }
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    faces.push_back({poly[0], poly[k], poly[k + 1]});
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open mesh " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TriMesh parse_obj(const std::string& text, const std::string& name) {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError(name, line_no, "vertex needs 3 coordinates");
      verts.emplace_back(parse_double(tok[1], name, line_no), parse_double(tok[2], name, line_no),
                         parse_double(tok[3], name, line_no));
    } else if (tok[0] == "f") {
      std::vector<int> poly;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string idx_tok = tok[k].substr(0, tok[k].find('/'));
        long idx = parse_long(idx_tok, name, line_no);
        const long n = static_cast<long>(verts.size());
        if (idx < 0) idx = n + idx + 1;  // relative reference
        if (idx < 1 || idx > n) {
          throw ParseError(name, line_no,
                           "face index " + idx_tok + " out of range (" + std::to_string(n) +
                               " vertices)");
        }
        poly.push_back(static_cast<int>(idx - 1));
      }
      add_polygon(faces, poly, name, line_no);
    }
    // vn, vt, o, g, s, usemtl, mtllib are ignored.
  }
  try {
    return TriMesh::create(std::move(verts), std::move(faces));
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw ParseError(name, line_no, e.what());
  }
}

TriMesh parse_ply(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || split_ws(line) != std::vector<std::string>{"ply"}) {
    throw ParseError(name, 1, "missing 'ply' magic");
  }
  long n_vertices = -1, n_faces = -1;
  std::vector<std::string> vertex_props;
  std::string current;
  bool header_done = false;
  while (next_line()) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") {
        throw ParseError(name, line_no, "only ASCII PLY is supported");
      }
    } else if (tok[0] == "element") {
      if (tok.size() < 3) throw ParseError(name, line_no, "malformed element line");
      current = tok[1];
      const long count = parse_long(tok[2], name, line_no);
      if (current == "vertex") n_vertices = count;
      if (current == "face") n_faces = count;
    } else if (tok[0] == "property") {
      if (current == "vertex") vertex_props.push_back(tok.back());
    } else if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw ParseError(name, line_no, "missing end_header");
  if (n_vertices < 0 || n_faces < 0) throw ParseError(name, line_no, "missing vertex/face element");

  auto prop_index = [&](const std::string& p) {
    for (std::size_t i = 0; i < vertex_props.size(); ++i) {
      if (vertex_props[i] == p) return static_cast<int>(i);
    }
    throw ParseError(name, line_no, "vertex property '" + p + "' missing");
  };
  const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");

  std::vector<Vec3> verts;
  verts.reserve(n_vertices);
  for (long v = 0; v < n_vertices; ++v) {
    if (!next_line()) throw ParseError(name, line_no, "unexpected end of vertex list");
    const auto tok = split_ws(line);
    if (tok.size() < vertex_props.size()) throw ParseError(name, line_no, "short vertex line");
    verts.emplace_back(parse_double(tok[ix], name, line_no), parse_double(tok[iy], name, line_no),
                       parse_double(tok[iz], name, line_no));
  }
  std::vector<std::array<int, 3>> faces;
  for (long f = 0; f < n_faces; ++f) {
    if (!next_line()) throw ParseError(name, line_no, "unexpected end of face list");
    const auto tok = split_ws(line);
    if (tok.empty()) throw ParseError(name, line_no, "empty face line");
    const long count = parse_long(tok[0], name, line_no);
    if (static_cast<long>(tok.size()) < count + 1) throw ParseError(name, line_no, "short face line");
    std::vector<int> poly;
    for (long k = 0; k < count; ++k) {
      const long idx = parse_long(tok[k + 1], name, line_no);
      if (idx < 0 || idx >= n_vertices) {
        throw ParseError(name, line_no, "face index " + tok[k + 1] + " out of range");
      }
      poly.push_back(static_cast<int>(idx));
    }
    add_polygon(faces, poly, name, line_no);
  }
  try {
    return TriMesh::create(std::move(verts), std::move(faces));
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw ParseError(name, line_no, e.what());
  }
}

TriMesh load_mesh(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (text.rfind("ply", 0) == 0) return parse_ply(text, path.string());
  return parse_obj(text, path.string());
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mesh " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

namespace {

// Appends an axis-aligned box [lo, hi] with outward CCW faces.
void append_box(std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& faces,
                const Vec3& lo, const Vec3& hi) {
  const int b = static_cast<int>(verts.size());
  for (int i = 0; i < 8; ++i) {
    verts.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                       (i & 4) ? hi.z() : lo.z());
  }
  const int quads[6][4] = {
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  };
  for (const auto& q : quads) {
    faces.push_back({b + q[0], b + q[1], b + q[2]});
    faces.push_back({b + q[0], b + q[2], b + q[3]});
  }
}

}  // namespace

TriMesh make_box(double sx, double sy, double sz) {
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
  append_box(v, f, Vec3(-sx / 2, -sy / 2, -sz / 2), Vec3(sx / 2, sy / 2, sz / 2));
  return TriMesh::create(std::move(v), std::move(f));
}

TriMesh make_cylinder(double radius, double height, int segments) {
  if (segments < 3) throw std::invalid_argument("cylinder needs >= 3 segments");
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
  for (int ring = 0; ring < 2; ++ring) {
    const double z = ring == 0 ? -height / 2 : height / 2;
    for (int i = 0; i < segments; ++i) {
      const double a = 2.0 * std::numbers::pi * i / segments;
      v.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
    }
  }
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    f.push_back({i, j, segments + j});
    f.push_back({i, segments + j, segments + i});
  }
  for (int i = 1; i + 1 < segments; ++i) {
    f.push_back({0, i + 1, i});
    f.push_back({segments, segments + i, segments + i + 1});
  }
  return TriMesh::create(std::move(v), std::move(f));
}

TriMesh make_l_block() {
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
  append_box(v, f, Vec3(0, 0, 0), Vec3(140, 40, 40));
  append_box(v, f, Vec3(0, 40, 0), Vec3(40, 100, 40));
  append_box(v, f, Vec3(100, 0, 40), Vec3(140, 40, 70));
  const Vec3 center(70, 50, 35);
  for (auto& p : v) p -= center;
  return TriMesh::create(std::move(v), std::move(f));
}

TriMesh mesh_from_spec(const std::string& spec, const std::filesystem::path& base_dir) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string kind = spec.substr(prefix.size());
    if (kind == "box") return make_box(120, 80, 50);
    if (kind == "cube") return make_box(100, 100, 100);
    if (kind == "cylinder") return make_cylinder(40, 120, 32);
    if (kind == "l_block") return make_l_block();
    throw DataError("unknown builtin mesh '" + kind + "'");
  }
  std::filesystem::path p(spec);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return load_mesh(p);
}

}  // namespace uwpose
