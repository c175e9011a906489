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
#include <string>
#include <string_view>

#include "json.hpp"

#include "uwpose/image.hpp"
#include "uwpose/rng.hpp"

namespace uwpose {

// Operator names accepted by apply_operator, in the order f_aug applies them:
// geometric, then photometric, then dropout. Square occlusion runs last.
inline constexpr std::array<std::string_view, 8> kAugmentOperators = {
    "perspective_transform", "crop_and_pad",  "affine",   "gaussian_blur",
    "invert",                "multiply",      "contrast_normalization",
    "coarse_dropout"};

struct Range {
  double lo = 0, hi = 0;
};

struct OperatorToggle {
  bool enabled = false;
  double probability = 0.5;
};

// Parameterization of f_aug. Ranges are repository defaults.
struct AugmentationConfig {
  OperatorToggle perspective_transform;
  OperatorToggle crop_and_pad;
  OperatorToggle affine;
  OperatorToggle coarse_dropout;
  OperatorToggle gaussian_blur;
  OperatorToggle invert;
  OperatorToggle multiply;
  OperatorToggle contrast_normalization;

  double square_occlusion_fraction = 0.0;

  double perspective_jitter = 0.05;    // corner jitter, fraction of size
  Range crop_and_pad_percent{-0.1, 0.1};  // >0 crops, <0 pads
  double affine_rotation_deg = 15.0;
  Range affine_scale{0.9, 1.1};
  double affine_translate = 0.05;      // fraction of size
  int dropout_grid = 8;
  Range dropout_rate{0.02, 0.2};
  Range blur_sigma{0.5, 2.0};
  Range multiply_factor{0.6, 1.4};
  Range contrast_factor{0.5, 1.5};

  // Throws std::invalid_argument on out-of-range fractions or probabilities.
  void validate() const;

  const OperatorToggle& toggle(std::string_view name) const;
  OperatorToggle& toggle(std::string_view name);

  // All operators off, no occlusion.
  static AugmentationConfig identity() { return {}; }
  // Per-object operator sets: "box", "cup", "jug", "hotstab".
  static AugmentationConfig for_object(std::string_view preset);
};

void to_json(nlohmann::json& j, const AugmentationConfig& c);
void from_json(const nlohmann::json& j, AugmentationConfig& c);

// crop where mask is set, background elsewhere. Sizes must match.
Image composite_background(const Image& crop, const Mask& mask, const Image& background);

// One square of side floor(fraction * min(H, W)) at a uniform position,
// filled with a uniform random gray level.
Image square_occlusion(const Image& image, double fraction, SeededRng& rng);

// Separable Gaussian blur with reflect-101 borders, radius ceil(3 sigma).
Image gaussian_blur(const Image& image, double sigma);

// Applies one named operator unconditionally with parameters drawn from
// config. Throws std::invalid_argument for unknown names.
Image apply_operator(std::string_view name, const Image& image, SeededRng& rng,
                     const AugmentationConfig& config);

// Each enabled operator fires with its own probability in kAugmentOperators
// order, then square occlusion. Values stay in [0, 1].
Image f_aug(const Image& image, const AugmentationConfig& config, SeededRng& rng);

}  // namespace uwpose
