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

#include "uwpose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uwpose/error.hpp"
#include "uwpose/rng.hpp"

namespace fs = std::filesystem;

namespace uwpose {

Image procedural_background(int width, int height, SeededRng& rng) {
  Image img(width, height, 3);
  // Murky blue-green base with a vertical gradient.
  float base[3], top[3];
  const double tint = rng.uniform(0.0, 0.5);
  base[0] = static_cast<float>(rng.uniform(0.0, 0.25) + 0.2 * tint);
  base[1] = static_cast<float>(rng.uniform(0.15, 0.55));
  base[2] = static_cast<float>(rng.uniform(0.25, 0.7));
  for (int c = 0; c < 3; ++c) top[c] = std::clamp(base[c] + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
  for (int y = 0; y < height; ++y) {
    const float a = height > 1 ? static_cast<float>(y) / static_cast<float>(height - 1) : 0.0f;
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1 - a) * top[c] + a * base[c];
    }
  }
  if (rng.bernoulli(0.3)) return img;  // homogeneous

  const int blobs = static_cast<int>(rng.uniform_int(4, 14));
  for (int b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double r = rng.uniform(0.03, 0.25) * std::max(width, height);
    float col[3];
    for (float& v : col) v = static_cast<float>(rng.uniform(0.0, 1.0));
    const float strength = static_cast<float>(rng.uniform(0.2, 0.8));
    const int x0 = std::max(0, static_cast<int>(cx - 2 * r)), x1 = std::min(width, static_cast<int>(cx + 2 * r) + 1);
    const int y0 = std::max(0, static_cast<int>(cy - 2 * r)), y1 = std::min(height, static_cast<int>(cy + 2 * r) + 1);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double d2 = ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy)) / (r * r);
        const float w = strength * static_cast<float>(std::exp(-d2));
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1 - w) * img.at(x, y, c) + w * col[c];
      }
    }
  }
  if (rng.bernoulli(0.5)) {
    const double freq = rng.uniform(0.01, 0.08), angle = rng.uniform(0, std::numbers::pi);
    const double amp = rng.uniform(0.03, 0.12);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const auto s = static_cast<float>(amp * std::sin(freq * (ca * x + sa * y) * 2 * std::numbers::pi));
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::clamp(img.at(x, y, c) + s, 0.0f, 1.0f);
      }
    }
  }
  return img;
}

std::vector<Image> procedural_backgrounds(int count, int width, int height, std::uint64_t seed) {
  std::vector<Image> out;
  SeededRng rng(seed);
  for (int i = 0; i < count; ++i) out.push_back(procedural_background(width, height, rng));
  return out;
}

namespace {

bool boxes_touch(const BBox& a, const BBox& b) {
  return a.x_min < b.x_max + 2 && b.x_min < a.x_max + 2 && a.y_min < b.y_max + 2 &&
         b.y_min < a.y_max + 2;
}

struct Square {
  int x0, y0, x1, y1;
  float color[3];
};

Square sample_occluder(const Image& img, SeededRng& rng, double max_size) {
  const double side = rng.uniform(0.05, max_size) * img.height;
  const double x0 = rng.uniform(-side / 2, img.width - side / 2);
  const double y0 = rng.uniform(-side / 2, img.height - side / 2);
  Square s{std::max(0, static_cast<int>(x0)), std::max(0, static_cast<int>(y0)),
           std::min(img.width, static_cast<int>(x0 + side)),
           std::min(img.height, static_cast<int>(y0 + side)), {}};
  for (float& v : s.color) v = static_cast<float>(rng.uniform());
  return s;
}

void paint(Image& img, const Square& s) {
  for (int y = s.y0; y < s.y1; ++y) {
    for (int x = s.x0; x < s.x1; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = s.color[c];
    }
  }
}

}  // namespace

SceneDataset generate_synthetic_scenes(const PipelineConfig& config,
                                       const std::map<std::string, TriMesh>& meshes,
                                       const std::vector<Image>& backgrounds, int frames_per_scene,
                                       std::uint64_t seed, const fs::path& root) {
  if (frames_per_scene < 1) throw std::invalid_argument("frame count must be >= 1");
  if (meshes.empty()) throw std::invalid_argument("no meshes to place");
  const GeneratorConfig& g = config.generator;
  const CameraIntrinsics& cam = config.camera;
  const int per_frame = std::min<int>(g.objects_per_frame, static_cast<int>(meshes.size()));
  std::vector<std::string> ids;
  for (const auto& [id, m] : meshes) ids.push_back(id);

  SceneDataset ds;
  ds.root = root;
  ds.camera = cam;
  fs::create_directories(root / "objects");
  for (const auto& [id, m] : meshes) {
    const fs::path p = root / "objects" / (id + ".obj");
    save_obj(m, p);
    ds.objects[id] = {p, m.diameter, std::nullopt};
  }

  SeededRng rng(seed);
  for (int s = 0; s < g.scenes; ++s) {
    Scene scene;
    char name[16];
    std::snprintf(name, sizeof name, "%06d", s);
    scene.id = name;
    const fs::path dir = root / "scenes" / scene.id;
    fs::create_directories(dir / "rgb");
    fs::create_directories(dir / "bg");
    for (int f = 0; f < frames_per_scene; ++f) {
      SceneFrame frame;
      frame.frame_id = f;
      Image bg = backgrounds.empty()
                     ? procedural_background(cam.width, cam.height, rng)
                     : resize_bilinear(backgrounds[rng.uniform_int(static_cast<std::int64_t>(backgrounds.size()))],
                                       cam.width, cam.height);
      const int occluders = g.max_occluders > 0 ? static_cast<int>(rng.uniform_int(0, g.max_occluders)) : 0;
      std::vector<std::string> chosen = ids;
      for (std::size_t i = 0; i + 1 < chosen.size(); ++i) {
        std::swap(chosen[i], chosen[i + rng.uniform_int(static_cast<std::int64_t>(chosen.size() - i))]);
      }
      chosen.resize(static_cast<std::size_t>(per_frame));

      Image rgb = bg;
      std::vector<BBox> placed;
      for (const auto& id : chosen) {
        const TriMesh& mesh = meshes.at(id);
        const double z = rng.uniform(g.depth_min, g.depth_max);
        bool ok = false;
        for (int attempt = 0; attempt < g.max_retries && !ok; ++attempt) {
          const double u = rng.uniform(0, cam.width), v = rng.uniform(0, cam.height);
          const PoseSE3 pose{random_rotation(rng),
                             Vec3((u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z)};
          const RenderOutput r = render(mesh, pose, cam);
          if (!r.valid || r.bbox.x_min < 1 || r.bbox.y_min < 1 || r.bbox.x_max > cam.width - 1 ||
              r.bbox.y_max > cam.height - 1) {
            continue;
          }
          if (std::any_of(placed.begin(), placed.end(),
                          [&](const BBox& b) { return boxes_touch(b, r.bbox); })) {
            continue;
          }
          for (int y = 0; y < cam.height; ++y) {
            for (int x = 0; x < cam.width; ++x) {
              if (!r.mask.at(x, y)) continue;
              for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = r.color.at(x, y, c);
            }
          }
          placed.push_back(r.bbox);
          frame.gt.push_back({id, r.bbox, pose, f});
          ok = true;
        }
        if (!ok) {
          throw DataError("scene " + scene.id + " frame " + std::to_string(f) + ": could not place '" +
                          id + "' after " + std::to_string(g.max_retries) + " attempts");
        }
      }
      // Occluders sit in front of the objects and are part of the backdrop.
      for (int o = 0; o < occluders; ++o) {
        const Square sq = sample_occluder(rgb, rng, g.occluder_max_size);
        paint(rgb, sq);
        paint(bg, sq);
      }
      if (g.noise_sigma > 0) {
        for (float& v : rgb.data) {
          v = std::clamp(v + static_cast<float>(g.noise_sigma * rng.normal()), 0.0f, 1.0f);
        }
      }
      frame.rgb = dir / "rgb" / frame_file_name(f);
      frame.background = dir / "bg" / frame_file_name(f);
      write_png(rgb, frame.rgb);
      write_png(bg, *frame.background);
      scene.frames.push_back(std::move(frame));
    }
    ds.scenes.push_back(std::move(scene));
  }
  save_dataset_metadata(ds);
  return ds;
}

std::vector<Detection> detect_naive(const Image& image, const Image& background,
                                    const DetectorConfig& config, const ClassResolver& resolve_class) {
  if (!image.same_shape(background)) throw std::invalid_argument("image and background differ in shape");
  const int w = image.width, h = image.height;
  std::vector<std::uint8_t> fg(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float d = 0.0f;
      for (int c = 0; c < image.channels; ++c) d = std::max(d, std::abs(image.at(x, y, c) - background.at(x, y, c)));
      fg[static_cast<std::size_t>(y) * w + x] = d > config.threshold;
    }
  }

  struct Component {
    BBox box;
    int area = 0;
  };
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (!fg[start]) continue;
    fg[start] = 0;
    stack.push_back(start);
    int minx = w, miny = h, maxx = -1, maxy = -1, area = 0;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int px = p % w, py = p / w;
      ++area;
      minx = std::min(minx, px);
      maxx = std::max(maxx, px);
      miny = std::min(miny, py);
      maxy = std::max(maxy, py);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int q = ny * w + nx;
          if (fg[q]) {
            fg[q] = 0;
            stack.push_back(q);
          }
        }
      }
    }
    if (area >= config.min_area) {
      comps.push_back({{static_cast<double>(minx), static_cast<double>(miny),
                        static_cast<double>(maxx + 1), static_cast<double>(maxy + 1)},
                       area});
    }
  }
  int max_area = 0;
  for (const auto& c : comps) max_area = std::max(max_area, c.area);
  std::vector<Detection> out;
  for (const auto& c : comps) {
    Detection d;
    d.bbox = c.box;
    d.score = static_cast<double>(c.area) / static_cast<double>(max_area);
    if (resolve_class) d.class_id = resolve_class(image, c.box);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace uwpose
