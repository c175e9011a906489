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

#include "uwpose/augment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uwpose/geom.hpp"

namespace uwpose {

namespace {

void clamp01(Image& img) {
  for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
  }
}

// Resamples through a map from output pixel centers to source coordinates.
template <typename Map>
Image warp(const Image& src, Map&& to_source) {
  Image out(src.width, src.height, src.channels, 0.0f);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const Vec2 s = to_source(x + 0.5, y + 0.5);
      for (int c = 0; c < src.channels; ++c) {
        out.at(x, y, c) = sample_bilinear(src, s.x(), s.y(), c);
      }
    }
  }
  clamp01(out);
  return out;
}

Image op_invert(const Image& img) {
  Image out = img;
  for (float& v : out.data) v = 1.0f - v;
  return out;
}

Image op_multiply(const Image& img, double k) {
  Image out = img;
  for (float& v : out.data) v = std::clamp(static_cast<float>(v * k), 0.0f, 1.0f);
  return out;
}

Image op_contrast(const Image& img, double c) {
  Image out = img;
  for (float& v : out.data) {
    v = std::clamp(static_cast<float>((v - 0.5) * c + 0.5), 0.0f, 1.0f);
  }
  return out;
}

Image op_coarse_dropout(const Image& img, int grid, double rate, SeededRng& rng) {
  Image out = img;
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      if (!rng.bernoulli(rate)) continue;
      const int x0 = gx * img.width / grid, x1 = (gx + 1) * img.width / grid;
      const int y0 = gy * img.height / grid, y1 = (gy + 1) * img.height / grid;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = 0.0f;
        }
      }
    }
  }
  return out;
}

Image op_affine(const Image& img, double angle_deg, double scale, double tx, double ty) {
  const double cx = img.width / 2.0, cy = img.height / 2.0;
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  return warp(img, [&](double x, double y) {
    // Inverse of: translate(t) * center * rotate * scale * uncenter.
    const double dx = x - cx - tx, dy = y - cy - ty;
    return Vec2((ca * dx + sa * dy) / scale + cx, (-sa * dx + ca * dy) / scale + cy);
  });
}

Image op_crop_and_pad(const Image& img, double percent) {
  const double w = img.width, h = img.height;
  return warp(img, [&](double x, double y) {
    return Vec2(percent * w + x * (1 - 2 * percent), percent * h + y * (1 - 2 * percent));
  });
}

// Homography H with H * dst_i ~ src_i for four correspondences.
Eigen::Matrix3d homography(const std::array<Vec2, 4>& dst, const std::array<Vec2, 4>& src) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = dst[i].x(), y = dst[i].y(), u = src[i].x(), v = src[i].y();
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
  Eigen::Matrix3d H;
  H << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return H;
}

Image op_perspective(const Image& img, double jitter, SeededRng& rng) {
  const double w = img.width, h = img.height;
  const std::array<Vec2, 4> corners = {Vec2(0, 0), Vec2(w, 0), Vec2(w, h), Vec2(0, h)};
  std::array<Vec2, 4> moved;
  for (int i = 0; i < 4; ++i) {
    moved[i] = corners[i] + Vec2(rng.uniform(-jitter, jitter) * w, rng.uniform(-jitter, jitter) * h);
  }
  const Eigen::Matrix3d H = homography(corners, moved);
  return warp(img, [&](double x, double y) {
    const Eigen::Vector3d p = H * Eigen::Vector3d(x, y, 1.0);
    return Vec2(p.x() / p.z(), p.y() / p.z());
  });
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

}  // namespace

void AugmentationConfig::validate() const {
  check_unit(square_occlusion_fraction, "square_occlusion_fraction");
  for (auto name : kAugmentOperators) check_unit(toggle(name).probability, "operator probability");
  if (dropout_grid < 1) throw std::invalid_argument("dropout_grid must be >= 1");
  check_unit(dropout_rate.lo, "dropout_rate");
  check_unit(dropout_rate.hi, "dropout_rate");
  if (!(blur_sigma.lo > 0)) throw std::invalid_argument("blur sigma must be positive");
  if (!(affine_scale.lo > 0)) throw std::invalid_argument("affine scale must be positive");
  if (!(crop_and_pad_percent.lo > -0.5 && crop_and_pad_percent.hi < 0.5)) {
    throw std::invalid_argument("crop_and_pad percent must be in (-0.5, 0.5)");
  }
}

const OperatorToggle& AugmentationConfig::toggle(std::string_view name) const {
  return const_cast<AugmentationConfig*>(this)->toggle(name);
}

OperatorToggle& AugmentationConfig::toggle(std::string_view name) {
  if (name == "perspective_transform") return perspective_transform;
  if (name == "crop_and_pad") return crop_and_pad;
  if (name == "affine") return affine;
  if (name == "coarse_dropout") return coarse_dropout;
  if (name == "gaussian_blur") return gaussian_blur;
  if (name == "invert") return invert;
  if (name == "multiply") return multiply;
  if (name == "contrast_normalization") return contrast_normalization;
  throw std::invalid_argument("unknown augmentation operator '" + std::string(name) + "'");
}

AugmentationConfig AugmentationConfig::for_object(std::string_view preset) {
  AugmentationConfig c;
  auto on = [&](std::initializer_list<std::string_view> names) {
    for (auto n : names) c.toggle(n).enabled = true;
  };
  if (preset == "box") {
    on({"crop_and_pad", "affine", "coarse_dropout", "invert", "multiply"});
    c.square_occlusion_fraction = 0.6;
  } else if (preset == "cup") {
    on({"crop_and_pad", "affine", "coarse_dropout", "invert", "multiply"});
    c.square_occlusion_fraction = 0.4;
  } else if (preset == "jug") {
    on({"affine", "gaussian_blur", "invert", "multiply", "contrast_normalization"});
    c.square_occlusion_fraction = 0.4;
  } else if (preset == "hotstab") {
    on({"crop_and_pad", "affine", "coarse_dropout", "gaussian_blur", "invert", "multiply",
        "contrast_normalization"});
    c.square_occlusion_fraction = 0.4;
  } else {
    throw std::invalid_argument("unknown augmentation preset '" + std::string(preset) + "'");
  }
  return c;
}

void to_json(nlohmann::json& j, const AugmentationConfig& c) {
  j = nlohmann::json::object();
  nlohmann::json ops = nlohmann::json::object();
  for (auto name : kAugmentOperators) {
    const auto& t = c.toggle(name);
    ops[std::string(name)] = {{"enabled", t.enabled}, {"probability", t.probability}};
  }
  j["operators"] = ops;
  j["square_occlusion_fraction"] = c.square_occlusion_fraction;
  j["perspective_jitter"] = c.perspective_jitter;
  j["crop_and_pad_percent"] = {c.crop_and_pad_percent.lo, c.crop_and_pad_percent.hi};
  j["affine_rotation_deg"] = c.affine_rotation_deg;
  j["affine_scale"] = {c.affine_scale.lo, c.affine_scale.hi};
  j["affine_translate"] = c.affine_translate;
  j["dropout_grid"] = c.dropout_grid;
  j["dropout_rate"] = {c.dropout_rate.lo, c.dropout_rate.hi};
  j["blur_sigma"] = {c.blur_sigma.lo, c.blur_sigma.hi};
  j["multiply_factor"] = {c.multiply_factor.lo, c.multiply_factor.hi};
  j["contrast_factor"] = {c.contrast_factor.lo, c.contrast_factor.hi};
}

void from_json(const nlohmann::json& j, AugmentationConfig& c) {
  c = AugmentationConfig{};
  if (j.contains("preset")) c = AugmentationConfig::for_object(j.at("preset").get<std::string>());
  if (j.contains("operators")) {
    for (const auto& [name, v] : j.at("operators").items()) {
      auto& t = c.toggle(name);
      if (v.is_boolean()) {
        t.enabled = v.get<bool>();
      } else {
        t.enabled = v.value("enabled", t.enabled);
        t.probability = v.value("probability", t.probability);
      }
    }
  }
  auto range = [&](const char* key, Range& r) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    r = {a.at(0).get<double>(), a.at(1).get<double>()};
  };
  c.square_occlusion_fraction = j.value("square_occlusion_fraction", c.square_occlusion_fraction);
  c.perspective_jitter = j.value("perspective_jitter", c.perspective_jitter);
  range("crop_and_pad_percent", c.crop_and_pad_percent);
  c.affine_rotation_deg = j.value("affine_rotation_deg", c.affine_rotation_deg);
  range("affine_scale", c.affine_scale);
  c.affine_translate = j.value("affine_translate", c.affine_translate);
  c.dropout_grid = j.value("dropout_grid", c.dropout_grid);
  range("dropout_rate", c.dropout_rate);
  range("blur_sigma", c.blur_sigma);
  range("multiply_factor", c.multiply_factor);
  range("contrast_factor", c.contrast_factor);
  c.validate();
}

Image composite_background(const Image& crop, const Mask& mask, const Image& background) {
  if (!crop.same_shape(background) || mask.width != crop.width || mask.height != crop.height) {
    throw std::invalid_argument("composite_background: size mismatch");
  }
  Image out = background;
  for (int y = 0; y < crop.height; ++y) {
    for (int x = 0; x < crop.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < crop.channels; ++c) out.at(x, y, c) = crop.at(x, y, c);
    }
  }
  return out;
}

Image square_occlusion(const Image& image, double fraction, SeededRng& rng) {
  check_unit(fraction, "occlusion fraction");
  const int side =
      static_cast<int>(std::floor(fraction * std::min(image.width, image.height) + 1e-9));
  if (side <= 0) return image;
  const int x0 = static_cast<int>(rng.uniform_int(0, image.width - side));
  const int y0 = static_cast<int>(rng.uniform_int(0, image.height - side));
  const auto gray = static_cast<float>(rng.uniform());
  Image out = image;
  for (int y = y0; y < y0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) {
      for (int c = 0; c < image.channels; ++c) out.at(x, y, c) = gray;
    }
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma > 0)) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  Image tmp(image.width, image.height, image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * image.at(reflect101(x + i, image.width), y, c);
        }
        tmp.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  Image out(image.width, image.height, image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp.at(x, reflect101(y + i, image.height), c);
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  clamp01(out);
  return out;
}

Image apply_operator(std::string_view name, const Image& image, SeededRng& rng,
                     const AugmentationConfig& config) {
  const auto& c = config;
  if (name == "invert") return op_invert(image);
  if (name == "multiply") {
    return op_multiply(image, rng.uniform(c.multiply_factor.lo, c.multiply_factor.hi));
  }
  if (name == "contrast_normalization") {
    return op_contrast(image, rng.uniform(c.contrast_factor.lo, c.contrast_factor.hi));
  }
  if (name == "gaussian_blur") {
    return gaussian_blur(image, rng.uniform(c.blur_sigma.lo, c.blur_sigma.hi));
  }
  if (name == "coarse_dropout") {
    const double rate = rng.uniform(c.dropout_rate.lo, c.dropout_rate.hi);
    return op_coarse_dropout(image, c.dropout_grid, rate, rng);
  }
  if (name == "affine") {
    const double angle = rng.uniform(-c.affine_rotation_deg, c.affine_rotation_deg);
    const double scale = rng.uniform(c.affine_scale.lo, c.affine_scale.hi);
    const double tx = rng.uniform(-c.affine_translate, c.affine_translate) * image.width;
    const double ty = rng.uniform(-c.affine_translate, c.affine_translate) * image.height;
    return op_affine(image, angle, scale, tx, ty);
  }
  if (name == "crop_and_pad") {
    return op_crop_and_pad(image, rng.uniform(c.crop_and_pad_percent.lo, c.crop_and_pad_percent.hi));
  }
  if (name == "perspective_transform") return op_perspective(image, c.perspective_jitter, rng);
  throw std::invalid_argument("unknown augmentation operator '" + std::string(name) + "'");
}

Image f_aug(const Image& image, const AugmentationConfig& config, SeededRng& rng) {
  Image out = image;
  for (auto name : kAugmentOperators) {
    const auto& t = config.toggle(name);
    if (!t.enabled) continue;
    if (!rng.bernoulli(t.probability)) continue;
    out = apply_operator(name, out, rng, config);
  }
  if (config.square_occlusion_fraction > 0) {
    out = square_occlusion(out, config.square_occlusion_fraction, rng);
  }
  return out;
}

}  // namespace uwpose
